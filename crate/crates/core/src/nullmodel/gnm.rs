use std::collections::HashSet;

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{pairs_in, NodeId, SimpleGraph};
use crate::seed::rng_from_seed;

/// Uniform random graph with exactly `m` edges on `n` nodes.
///
/// Sparse requests draw random pairs and reject repeats; requests above
/// half the possible pairs sample pair indices without replacement.
pub fn gen_gnm(n: usize, m: usize, seed: u64) -> Result<SimpleGraph> {
    let total = pairs_in(n);
    if m as u64 > total {
        return Err(Error::param(format!(
            "G(n,m) with m={m} exceeds the {total} possible pairs on n={n} nodes"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let edges: Vec<(NodeId, NodeId)> = if 2 * m as u64 <= total {
        let mut seen = HashSet::with_capacity(m);
        let mut edges = Vec::with_capacity(m);
        while edges.len() < m {
            let u = rng.random_range(0..n as NodeId);
            let v = rng.random_range(0..n as NodeId);
            if u == v {
                continue;
            }
            let e = (u.min(v), u.max(v));
            if seen.insert(e) {
                edges.push(e);
            }
        }
        edges
    } else {
        let mut picks = index::sample(&mut rng, total as usize, m).into_vec();
        picks.sort_unstable();
        pair_indices_to_edges(n, &picks)
    };
    Ok(SimpleGraph::from_edges(n, edges))
}

/// Map sorted indices into the row-major enumeration of pairs i < j.
fn pair_indices_to_edges(n: usize, sorted: &[usize]) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::with_capacity(sorted.len());
    let (mut row, mut base, mut row_len) = (0usize, 0usize, n.saturating_sub(1));
    for &idx in sorted {
        while idx >= base + row_len {
            base += row_len;
            row += 1;
            row_len -= 1;
        }
        out.push((row as NodeId, (row + 1 + idx - base) as NodeId));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::nullmodel::testutil::{assert_simple, chi2_critical};

    #[test]
    fn forced_and_empty() {
        let k5 = gen_gnm(5, 10, 1).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert!((0..5).all(|i| k5.degree(i) == 4));
        let e = gen_gnm(4, 0, 1).unwrap();
        assert_eq!((e.node_count(), e.edge_count()), (4, 0));
        assert!(matches!(gen_gnm(4, 7, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn exact_edge_count_and_simple() {
        for seed in 0..10 {
            let g = gen_gnm(100, 300, seed).unwrap();
            assert_eq!(g.edge_count(), 300);
            assert_simple(&g);
        }
        let dense = gen_gnm(30, 400, 5).unwrap();
        assert_eq!(dense.edge_count(), 400);
        assert_simple(&dense);
    }

    #[test]
    fn pair_index_mapping_enumerates_all_pairs() {
        let all: Vec<usize> = (0..pairs_in(6) as usize).collect();
        let edges = pair_indices_to_edges(6, &all);
        let expected: Vec<_> = (0..6u32).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
        assert_eq!(edges, expected);
    }

    fn chi2_uniform(n: usize, m: usize, draws: u64, outcomes: usize) -> (f64, usize) {
        let mut counts: HashMap<Vec<(NodeId, NodeId)>, u64> = HashMap::new();
        for seed in 0..draws {
            let g = gen_gnm(n, m, seed).unwrap();
            *counts.entry(g.edges().collect()).or_default() += 1;
        }
        assert!(counts.len() <= outcomes);
        let expected = draws as f64 / outcomes as f64;
        let observed: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // unseen outcomes contribute `expected` each
        let unseen = (outcomes - counts.len()) as f64 * expected;
        (observed + unseen, outcomes - 1)
    }

    #[test]
    fn uniform_over_edge_sets_sparse() {
        // C(10, 3) = 120 edge sets
        let (stat, dof) = chi2_uniform(5, 3, 10_000, 120);
        assert!(stat < chi2_critical(dof, 0.01), "chi2 = {stat}");
    }

    #[test]
    fn uniform_over_edge_sets_dense() {
        // C(10, 8) = 45 edge sets via the index-sampling path
        let (stat, dof) = chi2_uniform(5, 8, 10_000, 45);
        assert!(stat < chi2_critical(dof, 0.01), "chi2 = {stat}");
    }
}
