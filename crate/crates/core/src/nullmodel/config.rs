use std::collections::HashSet;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{NodeId, SimpleGraph};
use crate::seed::rng_from_seed;

/// Attempted swaps per edge when none is given.
pub const DEFAULT_SWAPS_PER_EDGE: usize = 20;

#[inline]
fn key(u: NodeId, v: NodeId) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// Randomize `g` by double-edge swaps, preserving every node's degree.
///
/// Performs `swaps_per_edge · m` attempts starting from `g` itself. Each
/// attempt picks two distinct edges (a, b), (c, d) uniformly and one of the
/// two rewirings (a, d), (c, b) or (a, c), (b, d) with equal probability; an
/// attempt that would create a self-loop or a multi-edge leaves the state
/// unchanged. The chain is symmetric, so its stationary distribution is
/// uniform over simple graphs with the degree sequence of `g`.
pub fn config_model_sample(g: &SimpleGraph, swaps_per_edge: usize, seed: u64) -> Result<SimpleGraph> {
    if swaps_per_edge == 0 {
        return Err(Error::param("swaps_per_edge must be at least 1"));
    }
    let m = g.edge_count();
    if m < 2 {
        return Ok(g.clone());
    }
    let mut rng = rng_from_seed(seed);
    let mut edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    let mut present: HashSet<u64> = edges.iter().map(|&(u, v)| key(u, v)).collect();

    for _ in 0..swaps_per_edge * m {
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut d);
        }
        // proposal: (a, b), (c, d) -> (a, d), (c, b)
        if a == d || c == b {
            continue;
        }
        let (ad, cb) = (key(a, d), key(c, b));
        if present.contains(&ad) || present.contains(&cb) {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, d));
        present.insert(ad);
        present.insert(cb);
        edges[i] = (a, d);
        edges[j] = (c, b);
    }
    Ok(SimpleGraph::from_edges(g.node_count(), edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullmodel::testutil::assert_simple;

    #[test]
    fn triangle_is_fixed_point() {
        let k3 = SimpleGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        for seed in 0..20 {
            assert_eq!(config_model_sample(&k3, 20, seed).unwrap(), k3);
        }
    }

    #[test]
    fn path_keeps_degrees() {
        let p4 = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        for seed in 0..20 {
            let out = config_model_sample(&p4, 10, seed).unwrap();
            assert_eq!(out.degree_sequence(), vec![1, 2, 2, 1]);
            assert_simple(&out);
        }
    }

    #[test]
    fn zero_swaps_rejected() {
        let p4 = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert!(config_model_sample(&p4, 0, 0).is_err());
    }

    #[test]
    fn actually_mixes() {
        // a perfect matching on 40 nodes should not survive 20m swaps intact
        let g = SimpleGraph::from_edges(40, (0..20u32).map(|i| (2 * i, 2 * i + 1)));
        let out = config_model_sample(&g, 20, 3).unwrap();
        assert_ne!(out, g);
        assert!((0..40).all(|i| out.degree(i) == 1));
    }
}
