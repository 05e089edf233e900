//! Degree-corrected stochastic block models.
//!
//! The microcanonical variant matches stubs between block pools so that
//! degrees and block–block edge counts come out exactly, then repairs any
//! self-loops and multi-edges with block-preserving double-edge swaps. The
//! maximum-entropy variant includes each pair independently with
//! probability `θ_i θ_j ω_{b_i b_j}`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::independent::{sample_pairs, warn_capped_maxent, WeightedGroup};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SimpleGraph};
use crate::seed::rng_from_seed;

/// Swap attempts per offending edge before it is deleted.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

/// Parameters of a degree-corrected block model.
///
/// `block_edges[r][s]` counts edge ends between blocks `r` and `s`; a
/// within-block edge contributes 2 to the diagonal, so row `r` sums to the
/// total degree of block `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModelParams {
    #[serde(rename = "k")]
    pub degrees: Vec<usize>,
    #[serde(rename = "b")]
    pub labels: Vec<u32>,
    #[serde(rename = "e")]
    pub block_edges: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Vec<f64>>>,
    /// Set when the labels came from block-model inference.
    #[serde(default)]
    pub description_length: Option<f64>,
}

impl BlockModelParams {
    /// Degrees and block edge counts of `g` under `labels`.
    ///
    /// The number of blocks is one more than the largest label.
    pub fn from_graph(g: &SimpleGraph, labels: &[u32]) -> Result<Self> {
        if labels.len() != g.node_count() {
            return Err(Error::param(format!(
                "{} labels for {} nodes",
                labels.len(),
                g.node_count()
            )));
        }
        let blocks = labels.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
        let mut e = vec![vec![0u64; blocks]; blocks];
        for (u, v) in g.edges() {
            let (r, s) = (labels[u as usize] as usize, labels[v as usize] as usize);
            e[r][s] += 1;
            e[s][r] += 1;
        }
        Ok(BlockModelParams {
            degrees: g.degree_sequence(),
            labels: labels.to_vec(),
            block_edges: e,
            theta: None,
            omega: None,
            description_length: None,
        })
    }

    pub fn block_count(&self) -> usize {
        self.block_edges.len()
    }

    /// Σ_s e_rs for every block r.
    pub fn block_totals(&self) -> Vec<u64> {
        self.block_edges.iter().map(|row| row.iter().sum()).collect()
    }

    /// Fill θ_i = k_i / e_{b_i} and ω_rs = e_rs, which makes the expected
    /// degrees and expected block edge counts match the exact ones.
    pub fn with_maxent_fit(mut self) -> Self {
        let totals = self.block_totals();
        let theta = self
            .degrees
            .iter()
            .zip(&self.labels)
            .map(|(&k, &b)| {
                let t = totals[b as usize];
                if t == 0 {
                    0.0
                } else {
                    k as f64 / t as f64
                }
            })
            .collect();
        let omega = self
            .block_edges
            .iter()
            .map(|row| row.iter().map(|&x| x as f64).collect())
            .collect();
        self.theta = Some(theta);
        self.omega = Some(omega);
        self
    }

    /// Check the consistency conditions the microcanonical generator needs.
    pub fn validate(&self) -> Result<()> {
        let blocks = self.block_count();
        if self.labels.len() != self.degrees.len() {
            return Err(Error::param("label and degree sequences differ in length"));
        }
        if let Some(&b) = self.labels.iter().find(|&&b| b as usize >= blocks) {
            return Err(Error::param(format!("label {b} outside 0..{blocks}")));
        }
        for r in 0..blocks {
            if self.block_edges[r].len() != blocks {
                return Err(Error::param("block edge matrix is not square"));
            }
            for s in 0..r {
                if self.block_edges[r][s] != self.block_edges[s][r] {
                    return Err(Error::param(format!("e[{r}][{s}] != e[{s}][{r}]")));
                }
            }
            if self.block_edges[r][r] % 2 != 0 {
                return Err(Error::param(format!("e[{r}][{r}] is odd")));
            }
        }
        let mut stubs = vec![0u64; blocks];
        for (&k, &b) in self.degrees.iter().zip(&self.labels) {
            stubs[b as usize] += k as u64;
        }
        for (r, (have, want)) in stubs.iter().zip(self.block_totals()).enumerate() {
            if *have != want {
                return Err(Error::param(format!(
                    "block {r}: degrees sum to {have} but edge counts to {want}"
                )));
            }
        }
        Ok(())
    }
}

const UNPAIRED: u32 = u32::MAX;

/// A multigraph held as a perfect matching of stubs.
///
/// Stub ownership never changes; rewiring only changes partners, so each
/// node's degree is fixed unless an edge is deleted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubMatching {
    n: usize,
    owner: Vec<NodeId>,
    partner: Vec<u32>,
}

impl StubMatching {
    fn new(degrees: &[usize]) -> Self {
        let owner: Vec<NodeId> = degrees
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat_n(i as NodeId, k))
            .collect();
        StubMatching {
            n: degrees.len(),
            partner: vec![UNPAIRED; owner.len()],
            owner,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Each edge once, as owner pairs; self-loops and repeats included.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(s, &p)| p != UNPAIRED && (s as u32) < p)
            .map(|(s, &p)| (self.owner[s], self.owner[p as usize]))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for (s, &p) in self.partner.iter().enumerate() {
            if p != UNPAIRED {
                d[self.owner[s] as usize] += 1;
            }
        }
        d
    }

    /// Block edge counts under `labels`, with the stub convention.
    pub fn block_edges(&self, labels: &[u32], blocks: usize) -> Vec<Vec<u64>> {
        let mut e = vec![vec![0u64; blocks]; blocks];
        for (u, v) in self.edges() {
            let (r, s) = (labels[u as usize] as usize, labels[v as usize] as usize);
            e[r][s] += 1;
            e[s][r] += 1;
        }
        e
    }

    /// Self-loops plus surplus copies of repeated pairs.
    pub fn non_simple_count(&self) -> usize {
        let mut seen: HashMap<u64, u32> = HashMap::new();
        let mut bad = 0;
        for (u, v) in self.edges() {
            if u == v || std::mem::replace(seen.entry(key(u, v)).or_default(), 1) == 1 {
                bad += 1;
            }
        }
        bad
    }

    pub fn is_simple(&self) -> bool {
        self.non_simple_count() == 0
    }

    fn pair(&mut self, a: u32, b: u32) {
        self.partner[a as usize] = b;
        self.partner[b as usize] = a;
    }
}

#[inline]
fn key(u: NodeId, v: NodeId) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// Microcanonical stub matching.
///
/// Every node contributes `k_i` stubs to its block's pool. For each block
/// pair r < s, `e_rs` stubs from each pool are paired at random; the
/// remaining `e_rr` stubs of block r are paired among themselves. Returns
/// the multigraph and its number of non-simple edges.
pub fn dcsbm_generate(params: &BlockModelParams, seed: u64) -> Result<(StubMatching, usize)> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let blocks = params.block_count();
    let mut state = StubMatching::new(&params.degrees);
    let mut pools: Vec<Vec<u32>> = vec![Vec::new(); blocks];
    for (s, &owner) in state.owner.iter().enumerate() {
        pools[params.labels[owner as usize] as usize].push(s as u32);
    }
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let mut cursor = vec![0usize; blocks];
    let take = |r: usize, count: usize, cursor: &mut Vec<usize>| -> std::ops::Range<usize> {
        let start = cursor[r];
        cursor[r] += count;
        start..cursor[r]
    };
    for r in 0..blocks {
        for s in r + 1..blocks {
            let count = params.block_edges[r][s] as usize;
            let from_r = take(r, count, &mut cursor);
            let from_s = take(s, count, &mut cursor);
            for (a, b) in from_r.zip(from_s) {
                state.pair(pools[r][a], pools[s][b]);
            }
        }
    }
    for (r, pool) in pools.iter().enumerate() {
        let rest = &pool[cursor[r]..];
        debug_assert_eq!(rest.len() as u64, params.block_edges[r][r]);
        for pair in rest.chunks_exact(2) {
            state.pair(pair[0], pair[1]);
        }
    }
    let bad = state.non_simple_count();
    Ok((state, bad))
}

/// Result of [`dcsbm_repair`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub graph: SimpleGraph,
    pub swaps_accepted: usize,
    pub deleted: usize,
}

/// Remove self-loops and multi-edges while keeping degrees, labels and
/// block edge counts.
///
/// For each offending edge (a, b), an edge (c, d) with c in a's block is
/// drawn uniformly and rewired to (a, d), (c, b). The swap is rejected if it
/// would create a self-loop or a repeated pair, and redrawn; after
/// `max_attempts` rejections the offending edge is deleted.
pub fn dcsbm_repair(
    state: StubMatching,
    params: &BlockModelParams,
    max_attempts: usize,
    seed: u64,
) -> Result<RepairOutcome> {
    dcsbm_repair_observed(state, params, max_attempts, seed, |_| {})
}

/// [`dcsbm_repair`] with a callback after every accepted swap.
pub fn dcsbm_repair_observed(
    mut state: StubMatching,
    params: &BlockModelParams,
    max_attempts: usize,
    seed: u64,
    mut observe: impl FnMut(&StubMatching),
) -> Result<RepairOutcome> {
    if params.labels.len() != state.n {
        return Err(Error::param("parameters do not match the multigraph"));
    }
    let mut rng = rng_from_seed(seed);
    let blocks = params.block_count();
    let mut block_stubs: Vec<Vec<u32>> = vec![Vec::new(); blocks];
    for (s, &owner) in state.owner.iter().enumerate() {
        block_stubs[params.labels[owner as usize] as usize].push(s as u32);
    }

    let mut mult: HashMap<u64, u32> = HashMap::new();
    let mut offending: Vec<u32> = Vec::new();
    for (s, &p) in state.partner.iter().enumerate() {
        if p == UNPAIRED || (s as u32) > p {
            continue;
        }
        let (u, v) = (state.owner[s], state.owner[p as usize]);
        let c = mult.entry(key(u, v)).or_default();
        *c += 1;
        if u == v || *c > 1 {
            offending.push(s as u32);
        }
    }

    let (mut accepted, mut deleted) = (0, 0);
    for s1 in offending {
        let s2 = state.partner[s1 as usize];
        if s2 == UNPAIRED {
            continue;
        }
        let (x, y) = (state.owner[s1 as usize], state.owner[s2 as usize]);
        if x != y && mult[&key(x, y)] <= 1 {
            continue;
        }
        let mut fixed = false;
        for _ in 0..max_attempts {
            let (sa, sb) = if rng.random::<bool>() { (s1, s2) } else { (s2, s1) };
            let (a, b) = (state.owner[sa as usize], state.owner[sb as usize]);
            let pool = &block_stubs[params.labels[a as usize] as usize];
            let sc = pool[rng.random_range(0..pool.len())];
            let sd = state.partner[sc as usize];
            if sd == UNPAIRED || sc == sa || sc == sb {
                continue;
            }
            let (c, d) = (state.owner[sc as usize], state.owner[sd as usize]);
            if a == d || c == b {
                continue;
            }
            let (ad, cb) = (key(a, d), key(c, b));
            if ad == cb || mult.get(&ad).is_some_and(|&k| k > 0) || mult.get(&cb).is_some_and(|&k| k > 0) {
                continue;
            }
            *mult.get_mut(&key(a, b)).unwrap() -= 1;
            *mult.get_mut(&key(c, d)).unwrap() -= 1;
            *mult.entry(ad).or_default() += 1;
            *mult.entry(cb).or_default() += 1;
            state.pair(sa, sd);
            state.pair(sc, sb);
            accepted += 1;
            observe(&state);
            fixed = true;
            break;
        }
        if !fixed {
            *mult.get_mut(&key(x, y)).unwrap() -= 1;
            state.partner[s1 as usize] = UNPAIRED;
            state.partner[s2 as usize] = UNPAIRED;
            deleted += 1;
        }
    }

    debug_assert!(state.is_simple());
    Ok(RepairOutcome {
        graph: SimpleGraph::from_edges(state.n, state.edges()),
        swaps_accepted: accepted,
        deleted,
    })
}

/// Maximum-entropy block model: pair (i, j) independently with probability
/// `min(1, θ_i θ_j ω_{b_i b_j})`.
pub fn dcsbm_maxent_sample(params: &BlockModelParams, seed: u64) -> Result<SimpleGraph> {
    let (theta, omega) = match (&params.theta, &params.omega) {
        (Some(t), Some(o)) => (t, o),
        _ => return Err(Error::param("maximum-entropy sampling needs theta and omega")),
    };
    let n = params.labels.len();
    let blocks = params.block_count();
    if theta.len() != n {
        return Err(Error::param("theta length differs from the node count"));
    }
    if omega.len() != blocks || omega.iter().any(|row| row.len() != blocks) {
        return Err(Error::param("omega must be a square matrix over the blocks"));
    }
    if theta.iter().chain(omega.iter().flatten()).any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::param("theta and omega must be finite and nonnegative"));
    }
    if let Some(&b) = params.labels.iter().find(|&&b| b as usize >= blocks) {
        return Err(Error::param(format!("label {b} outside 0..{blocks}")));
    }

    let mut members: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); blocks];
    for (i, (&b, &t)) in params.labels.iter().zip(theta).enumerate() {
        members[b as usize].push((i as NodeId, t));
    }
    let groups: Vec<WeightedGroup> = members.into_iter().map(WeightedGroup::new).collect();

    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    let mut capped = 0;
    for r in 0..blocks {
        for s in r..blocks {
            let right = (s != r).then(|| &groups[s]);
            capped += sample_pairs(&groups[r], right, omega[r][s], &mut rng, &mut edges);
        }
    }
    warn_capped_maxent(capped);
    Ok(SimpleGraph::from_edges(n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullmodel::testutil::assert_simple;

    fn planted(block: usize, k: usize, cross: u64) -> BlockModelParams {
        let n = 2 * block;
        let within = (block * k) as u64 - cross;
        BlockModelParams {
            degrees: vec![k; n],
            labels: (0..n).map(|i| (i >= block) as u32).collect(),
            block_edges: vec![vec![within, cross], vec![cross, within]],
            theta: None,
            omega: None,
            description_length: None,
        }
    }

    #[test]
    fn single_block_is_configuration_draw() {
        let params = BlockModelParams {
            degrees: vec![3, 2, 2, 1],
            labels: vec![0; 4],
            block_edges: vec![vec![8]],
            theta: None,
            omega: None,
            description_length: None,
        };
        for seed in 0..10 {
            let (mg, _) = dcsbm_generate(&params, seed).unwrap();
            assert_eq!(mg.degrees(), params.degrees);
            assert_eq!(mg.edge_count(), 4);
        }
    }

    #[test]
    fn forced_single_edge() {
        let params = BlockModelParams {
            degrees: vec![1, 1],
            labels: vec![0, 1],
            block_edges: vec![vec![0, 1], vec![1, 0]],
            theta: None,
            omega: None,
            description_length: None,
        };
        let (mg, bad) = dcsbm_generate(&params, 0).unwrap();
        assert_eq!(bad, 0);
        assert_eq!(mg.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn planted_counts_are_exact_before_repair() {
        let params = planted(50, 10, 100);
        for seed in 0..10 {
            let (mg, _) = dcsbm_generate(&params, seed).unwrap();
            assert_eq!(mg.degrees(), params.degrees);
            assert_eq!(mg.block_edges(&params.labels, 2), params.block_edges);
        }
    }

    #[test]
    fn invalid_params() {
        let mut p = planted(5, 2, 2);
        p.block_edges[0][0] = 7;
        p.block_edges[1][1] = 9;
        assert!(matches!(dcsbm_generate(&p, 0), Err(Error::Parameter(_))));
        let mut p = planted(5, 2, 2);
        p.degrees[0] = 3;
        assert!(matches!(dcsbm_generate(&p, 0), Err(Error::Parameter(_))));
        let mut p = planted(5, 2, 2);
        p.block_edges[0][1] = 4;
        assert!(matches!(dcsbm_generate(&p, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn repair_of_simple_input_is_noop() {
        let g = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        let params = BlockModelParams::from_graph(&g, &[0, 0, 1, 1]).unwrap();
        let mut state = StubMatching::new(&params.degrees);
        // stubs: node i owns 2i, 2i+1
        state.pair(0, 3);
        state.pair(2, 5);
        state.pair(4, 7);
        state.pair(6, 1);
        let out = dcsbm_repair(state, &params, 100, 0).unwrap();
        assert_eq!(out.graph, g);
        assert_eq!((out.deleted, out.swaps_accepted), (0, 0));
    }

    /// Multi-edge (a, b) next to an edge (c, d) with c in a's block and
    /// neither (a, d) nor (c, b) present: the only legal swap resolves it.
    #[test]
    fn figure_style_swap() {
        // a=0, c=1 in block 0; b=2, d=3 in block 1
        let params = BlockModelParams {
            degrees: vec![2, 1, 2, 1],
            labels: vec![0, 0, 1, 1],
            block_edges: vec![vec![0, 3], vec![3, 0]],
            theta: None,
            omega: None,
            description_length: None,
        };
        let mut state = StubMatching::new(&params.degrees);
        // owners: 0:[0,1] 1:[2] 2:[3,4] 3:[5]
        state.pair(0, 3);
        state.pair(1, 4); // second copy of (0, 2)
        state.pair(2, 5); // (1, 3)
        assert_eq!(state.non_simple_count(), 1);
        let before_deg = state.degrees();
        let before_e = state.block_edges(&params.labels, 2);
        let mut checked = 0;
        let out = dcsbm_repair_observed(state, &params, 100, 7, |s| {
            assert_eq!(s.degrees(), before_deg);
            assert_eq!(s.block_edges(&params.labels, 2), before_e);
            checked += 1;
        })
        .unwrap();
        assert_eq!(out.deleted, 0);
        assert_eq!(checked, 1);
        assert_simple(&out.graph);
        let mut edges: Vec<_> = out.graph.edges().collect();
        edges.sort();
        assert_eq!(edges, vec![(0, 2), (0, 3), (1, 2)]);
    }

    #[test]
    fn unresolvable_edge_is_deleted() {
        // a double edge between the only two nodes cannot be swapped away
        let params = BlockModelParams {
            degrees: vec![2, 2],
            labels: vec![0, 0],
            block_edges: vec![vec![4]],
            theta: None,
            omega: None,
            description_length: None,
        };
        let mut state = StubMatching::new(&params.degrees);
        state.pair(0, 2);
        state.pair(1, 3);
        let out = dcsbm_repair(state, &params, 10, 0).unwrap();
        assert_eq!(out.deleted, 1);
        assert_eq!(out.graph.edge_count(), 1);
    }

    #[test]
    fn self_loops_are_repaired() {
        let params = planted(30, 6, 40);
        for seed in 0..10 {
            let (mg, bad) = dcsbm_generate(&params, seed).unwrap();
            let out = dcsbm_repair(mg, &params, DEFAULT_MAX_ATTEMPTS, seed).unwrap();
            assert_simple(&out.graph);
            assert!(out.swaps_accepted + out.deleted >= bad.min(1));
            if out.deleted == 0 {
                assert_eq!(out.graph.degree_sequence(), params.degrees);
                let relabeled = BlockModelParams::from_graph(&out.graph, &params.labels).unwrap();
                assert_eq!(relabeled.block_edges, params.block_edges);
            }
        }
    }

    #[test]
    fn maxent_empty_and_chung_lu_reduction() {
        let g = SimpleGraph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)]);
        let mut p = BlockModelParams::from_graph(&g, &[0; 5]).unwrap().with_maxent_fit();
        // B = 1: θ_i θ_j ω = k_i k_j / 2m, the Chung–Lu probability
        let theta = p.theta.clone().unwrap();
        let omega = p.omega.clone().unwrap()[0][0];
        let two_m = 2.0 * g.edge_count() as f64;
        for i in 0..5 {
            for j in 0..5 {
                let cl = g.degree(i) as f64 * g.degree(j) as f64 / two_m;
                assert!((theta[i] * theta[j] * omega - cl).abs() < 1e-12);
            }
        }
        p.omega = Some(vec![vec![0.0]]);
        assert_eq!(dcsbm_maxent_sample(&p, 1).unwrap().edge_count(), 0);
    }

    #[test]
    fn maxent_rejects_bad_params() {
        let g = SimpleGraph::from_edges(3, [(0, 1), (1, 2)]);
        let p = BlockModelParams::from_graph(&g, &[0, 0, 1]).unwrap();
        assert!(dcsbm_maxent_sample(&p, 0).is_err());
        let mut p = p.with_maxent_fit();
        p.theta.as_mut().unwrap()[0] = -0.5;
        assert!(matches!(dcsbm_maxent_sample(&p, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn json_field_names() {
        let p = planted(2, 1, 0);
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        for k in ["k", "b", "e", "description_length"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        assert!(v.get("theta").is_none());
        let back: BlockModelParams = serde_json::from_value(v).unwrap();
        assert_eq!(back.block_edges, p.block_edges);
    }
}
