//! Exact structural measures: mean degree, mean geodesic distance, global
//! clustering and degree assortativity.
//!
//! Degenerate inputs produce `None` rather than a numeric placeholder, so
//! "undefined" is never confused with a genuine zero downstream.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, NodeId, SimpleGraph};

/// Per-network bundle of the four measures plus provenance.
///
/// Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub n: usize,
    pub m: usize,
    pub mean_degree: Option<f64>,
    pub mean_geodesic: Option<f64>,
    pub clustering: Option<f64>,
    pub assortativity: Option<f64>,
    /// `empirical` or the null-model name.
    pub source: String,
    pub seed: Option<u64>,
}

impl MeasureRecord {
    /// All four measures computed exactly.
    pub fn exact(g: &SimpleGraph, source: impl Into<String>, seed: Option<u64>) -> Self {
        MeasureRecord {
            n: g.node_count(),
            m: g.edge_count(),
            mean_degree: mean_degree(g).ok(),
            mean_geodesic: mean_geodesic_exact(g),
            clustering: global_clustering(g),
            assortativity: degree_assortativity(g),
            source: source.into(),
            seed,
        }
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "n",
        "m",
        "mean_degree",
        "mean_geodesic",
        "clustering",
        "assortativity",
        "source",
        "seed",
    ];
}

/// One of the four structural measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    MeanDegree,
    MeanGeodesic,
    Clustering,
    Assortativity,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::MeanDegree,
        Measure::MeanGeodesic,
        Measure::Clustering,
        Measure::Assortativity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::MeanDegree => "mean_degree",
            Measure::MeanGeodesic => "mean_geodesic",
            Measure::Clustering => "clustering",
            Measure::Assortativity => "assortativity",
        }
    }

    pub fn of(self, record: &MeasureRecord) -> Option<f64> {
        match self {
            Measure::MeanDegree => record.mean_degree,
            Measure::MeanGeodesic => record.mean_geodesic,
            Measure::Clustering => record.clustering,
            Measure::Assortativity => record.assortativity,
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown measure {s:?}")))
    }
}

/// ⟨k⟩ = 2m / n.
pub fn mean_degree(g: &SimpleGraph) -> Result<f64> {
    if g.node_count() == 0 {
        return Err(Error::Undefined("mean degree of a graph with no nodes"));
    }
    Ok(2.0 * g.edge_count() as f64 / g.node_count() as f64)
}

/// Mean hop distance over all reachable unordered pairs.
///
/// Returns `None` when no pair of nodes is connected.
pub fn mean_geodesic_exact(g: &SimpleGraph) -> Option<f64> {
    let parts = connected_components(g);
    let pairs = parts.reachable_pairs();
    if pairs == 0 {
        return None;
    }
    // Sources grouped by component keep each bit-parallel sweep local.
    let sources: Vec<NodeId> = parts
        .members()
        .into_iter()
        .filter(|c| c.len() > 1)
        .flatten()
        .collect();
    let ordered_sum = distance_sum(g, &sources);
    Some(ordered_sum as f64 / 2.0 / pairs as f64)
}

const LANES: usize = 8;
const SOURCES_PER_SWEEP: usize = 64 * LANES;
type Mask = [u64; LANES];
const EMPTY: Mask = [0; LANES];

#[inline]
fn is_empty(m: &Mask) -> bool {
    m.iter().all(|&w| w == 0)
}

struct SweepScratch {
    visited: Vec<Mask>,
    frontier: Vec<Mask>,
    next: Vec<Mask>,
    touched: Vec<NodeId>,
    current: Vec<NodeId>,
    upcoming: Vec<NodeId>,
}

impl SweepScratch {
    fn new(n: usize) -> Self {
        SweepScratch {
            visited: vec![EMPTY; n],
            frontier: vec![EMPTY; n],
            next: vec![EMPTY; n],
            touched: Vec::new(),
            current: Vec::new(),
            upcoming: Vec::new(),
        }
    }
}

/// Σ over sources s and all nodes t reachable from s of d(s, t).
///
/// Runs up to 512 breadth-first searches at once, one bit per source.
fn distance_sum(g: &SimpleGraph, sources: &[NodeId]) -> u64 {
    let n = g.node_count();
    sources
        .par_chunks(SOURCES_PER_SWEEP)
        .map_init(|| SweepScratch::new(n), |s, chunk| sweep(g, chunk, s))
        .sum()
}

fn sweep(g: &SimpleGraph, sources: &[NodeId], s: &mut SweepScratch) -> u64 {
    s.current.clear();
    for (bit, &src) in sources.iter().enumerate() {
        let v = src as usize;
        if is_empty(&s.frontier[v]) {
            s.current.push(src);
            s.touched.push(src);
        }
        s.frontier[v][bit / 64] |= 1 << (bit % 64);
        s.visited[v][bit / 64] |= 1 << (bit % 64);
    }

    let mut full = EMPTY;
    for bit in 0..sources.len() {
        full[bit / 64] |= 1 << (bit % 64);
    }
    let n = g.node_count();
    let mut total = 0u64;
    let mut level = 0u64;
    while !s.current.is_empty() {
        level += 1;
        s.upcoming.clear();
        let frontier_volume: usize = s.current.iter().map(|&v| g.degree(v as usize)).sum();
        if frontier_volume > g.edge_count() / 4 {
            // pull: each node gathers from its neighbors' frontiers
            for w in 0..n {
                let seen = s.visited[w];
                if seen == full {
                    continue;
                }
                let mut acc = EMPTY;
                for &v in g.neighbors(w) {
                    let f = &s.frontier[v as usize];
                    for l in 0..LANES {
                        acc[l] |= f[l];
                    }
                }
                let mut any = 0;
                for l in 0..LANES {
                    acc[l] &= !seen[l];
                    any |= acc[l];
                }
                if any != 0 {
                    s.next[w] = acc;
                    s.upcoming.push(w as NodeId);
                }
            }
        } else {
            s.push_level(g);
        }
        for &v in &s.current {
            s.frontier[v as usize] = EMPTY;
        }
        for &w in &s.upcoming {
            let w = w as usize;
            let nx = std::mem::replace(&mut s.next[w], EMPTY);
            let mut reached = 0u32;
            for (seen, &bits) in s.visited[w].iter_mut().zip(&nx) {
                *seen |= bits;
                reached += bits.count_ones();
            }
            total += level * reached as u64;
            s.frontier[w] = nx;
        }
        s.touched.extend_from_slice(&s.upcoming);
        std::mem::swap(&mut s.current, &mut s.upcoming);
    }

    for &v in &s.touched {
        s.visited[v as usize] = EMPTY;
        s.frontier[v as usize] = EMPTY;
    }
    s.touched.clear();
    total
}

impl SweepScratch {
    /// Push: each frontier node forwards its bits to unvisited neighbors.
    fn push_level(&mut self, g: &SimpleGraph) {
        let s = self;
        for &v in &s.current {
            let f = s.frontier[v as usize];
            for &w in g.neighbors(v as usize) {
                let w = w as usize;
                let seen = &s.visited[w];
                let mut add = EMPTY;
                for l in 0..LANES {
                    add[l] = f[l] & !seen[l];
                }
                if is_empty(&add) {
                    continue;
                }
                let nx = &mut s.next[w];
                if is_empty(nx) {
                    s.upcoming.push(w as NodeId);
                }
                for l in 0..LANES {
                    nx[l] |= add[l];
                }
            }
        }
    }
}

/// Number of triangles, each counted once.
///
/// Edges are oriented from lower to higher (degree, index) rank and each
/// triangle is found exactly once by merging the out-lists of its two
/// lowest-ranked corners.
pub fn triangle_count(g: &SimpleGraph) -> u64 {
    let n = g.node_count();
    let ranks_above = |u: usize, v: usize| (g.degree(v), v) > (g.degree(u), u);
    let out: Vec<Vec<NodeId>> = (0..n)
        .into_par_iter()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&v| ranks_above(u, v as usize))
                .collect()
        })
        .collect();
    (0..n)
        .into_par_iter()
        .map(|u| {
            let ou = &out[u];
            ou.iter()
                .map(|&v| sorted_intersection_len(ou, &out[v as usize]))
                .sum::<u64>()
        })
        .sum()
}

fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Σ_i C(deg(i), 2).
pub fn connected_triples(g: &SimpleGraph) -> u64 {
    (0..g.node_count())
        .map(|i| {
            let d = g.degree(i) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum()
}

/// Transitivity: 3 × triangles / connected triples. `None` without triples.
pub fn global_clustering(g: &SimpleGraph) -> Option<f64> {
    let triples = connected_triples(g);
    if triples == 0 {
        return None;
    }
    Some(3.0 * triangle_count(g) as f64 / triples as f64)
}

/// Pearson correlation of the degrees at either end of an edge.
///
/// Computed from exact integer moments; `None` with no edges or when every
/// edge end has the same degree.
pub fn degree_assortativity(g: &SimpleGraph) -> Option<f64> {
    let m = g.edge_count() as i128;
    if m == 0 {
        return None;
    }
    let (mut prod, mut sum, mut sq) = (0i128, 0i128, 0i128);
    for (u, v) in g.edges() {
        let j = g.degree(u as usize) as i128;
        let k = g.degree(v as usize) as i128;
        prod += j * k;
        sum += j + k;
        sq += j * j + k * k;
    }
    // Numerator and denominator both scaled by 4M².
    let num = 4 * m * prod - sum * sum;
    let den = 2 * m * sq - sum * sum;
    if den == 0 {
        return None;
    }
    Some(num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: usize) -> SimpleGraph {
        SimpleGraph::from_edges(
            n,
            (0..n as NodeId).flat_map(|i| (i + 1..n as NodeId).map(move |j| (i, j))),
        )
    }

    fn path(n: usize) -> SimpleGraph {
        SimpleGraph::from_edges(n, (1..n as NodeId).map(|i| (i - 1, i)))
    }

    #[test]
    fn mean_degree_examples() {
        assert_eq!(mean_degree(&k(3)).unwrap(), 2.0);
        assert_eq!(mean_degree(&path(4)).unwrap(), 1.5);
        assert_eq!(mean_degree(&SimpleGraph::empty(5)).unwrap(), 0.0);
        assert!(matches!(mean_degree(&SimpleGraph::empty(0)), Err(Error::Undefined(_))));
    }

    #[test]
    fn geodesic_examples() {
        assert_eq!(mean_geodesic_exact(&k(3)), Some(1.0));
        // pairs at distance 1, 1, 2
        assert!((mean_geodesic_exact(&path(3)).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        // two disjoint K2: only the two within-component pairs count
        let two = SimpleGraph::from_edges(4, [(0, 1), (2, 3)]);
        assert_eq!(mean_geodesic_exact(&two), Some(1.0));
        assert_eq!(mean_geodesic_exact(&SimpleGraph::empty(4)), None);
    }

    #[test]
    fn geodesic_spans_multiple_sweeps() {
        // more sources than one sweep holds; P_n has mean distance (n+1)/3
        let n = 700;
        let got = mean_geodesic_exact(&path(n)).unwrap();
        assert!((got - (n as f64 + 1.0) / 3.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(global_clustering(&k(3)), Some(1.0));
        assert_eq!(global_clustering(&path(3)), Some(0.0));
        // K4 minus an edge: 2 triangles, degrees 3,3,2,2 give 3+3+1+1 = 8 triples
        let diamond = SimpleGraph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(triangle_count(&diamond), 2);
        assert_eq!(connected_triples(&diamond), 8);
        assert_eq!(global_clustering(&diamond), Some(0.75));
        assert_eq!(global_clustering(&SimpleGraph::from_edges(4, [(0, 1), (2, 3)])), None);
        assert_eq!(triangle_count(&k(6)), 20);
    }

    #[test]
    fn assortativity_examples() {
        let r = degree_assortativity(&path(4)).unwrap();
        assert!((r + 0.5).abs() < 1e-15, "{r}");
        let k3_k2 = SimpleGraph::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4)]);
        assert!((degree_assortativity(&k3_k2).unwrap() - 1.0).abs() < 1e-15);
        let c4 = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(degree_assortativity(&c4), None);
        assert_eq!(degree_assortativity(&SimpleGraph::empty(3)), None);
        // star: perfectly disassortative
        let star = SimpleGraph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(degree_assortativity(&star), Some(-1.0));
    }

    #[test]
    fn record_has_flags() {
        let r = MeasureRecord::exact(&SimpleGraph::empty(3), "empirical", None);
        assert_eq!(r.mean_degree, Some(0.0));
        assert_eq!(r.mean_geodesic, None);
        assert_eq!(r.clustering, None);
        assert_eq!(r.assortativity, None);
    }

    fn plain_mean_geodesic(g: &SimpleGraph) -> Option<f64> {
        let n = g.node_count();
        let (mut sum, mut count) = (0u64, 0u64);
        for s in 0..n {
            let mut d = vec![u32::MAX; n];
            d[s] = 0;
            let mut q = std::collections::VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in g.neighbors(v) {
                    if d[w as usize] == u32::MAX {
                        d[w as usize] = d[v] + 1;
                        q.push_back(w as usize);
                    }
                }
            }
            for &x in &d[s + 1..] {
                if x != u32::MAX {
                    sum += x as u64;
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum as f64 / count as f64)
    }

    #[test]
    fn exact_matches_plain_bfs_on_larger_graphs() {
        // sparse ones stay on the push path, dense ones switch to pull
        for (n, m, seed) in [(700, 500, 1), (900, 1300, 2), (1100, 20000, 3), (600, 60000, 4)] {
            let g = crate::nullmodel::gen_gnm(n, m, seed).unwrap();
            let (a, b) = (mean_geodesic_exact(&g).unwrap(), plain_mean_geodesic(&g).unwrap());
            assert!((a - b).abs() < 1e-12, "n={n} m={m}: {a} vs {b}");
        }
    }
}
