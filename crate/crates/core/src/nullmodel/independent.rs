//! Models that include each node pair independently.
//!
//! All three share one sampler: pair (i, j) is included with probability
//! `min(1, scale · w_i · w_j)`. With nodes sorted by descending weight the
//! probability along a row is non-increasing, so the sampler can jump over
//! runs of excluded pairs with geometric skips and thin the landing pair,
//! giving expected cost linear in nodes plus edges.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{NodeId, SimpleGraph};
use crate::seed::Rng;

/// A group of nodes with weights, sorted by descending weight.
pub(crate) struct WeightedGroup {
    nodes: Vec<(NodeId, f64)>,
}

impl WeightedGroup {
    pub(crate) fn new(mut nodes: Vec<(NodeId, f64)>) -> Self {
        nodes.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        WeightedGroup { nodes }
    }
}

/// Sample pairs within `left` (when `right` is `None`) or across `left` ×
/// `right`. Returns the number of pairs whose raw probability exceeded 1.
pub(crate) fn sample_pairs(
    left: &WeightedGroup,
    right: Option<&WeightedGroup>,
    scale: f64,
    rng: &mut Rng,
    out: &mut Vec<(NodeId, NodeId)>,
) -> u64 {
    let within = right.is_none();
    let right = right.unwrap_or(left);
    let (l, r) = (&left.nodes, &right.nodes);
    let mut capped = 0;
    if scale <= 0.0 {
        return 0;
    }
    for (u, &(node_u, w_u)) in l.iter().enumerate() {
        let mut v = if within { u + 1 } else { 0 };
        if v >= r.len() {
            continue;
        }
        let mut p = (scale * w_u * r[v].1).min(1.0);
        while v < r.len() && p > 0.0 {
            if p < 1.0 {
                let x: f64 = rng.random();
                // (1 - x) lies in (0, 1], so the log is finite.
                let skip = ((1.0 - x).ln() / (1.0 - p).ln()).floor();
                if skip >= (r.len() - v) as f64 {
                    break;
                }
                v += skip as usize;
            }
            let raw = scale * w_u * r[v].1;
            if raw > 1.0 {
                capped += 1;
            }
            let q = raw.min(1.0);
            if q >= p || rng.random::<f64>() < q / p {
                out.push((node_u, r[v].0));
            }
            p = q;
            v += 1;
        }
    }
    capped
}

fn warn_capped(model: &str, capped: u64) {
    if capped > 0 {
        log::warn!("{model}: {capped} pair probabilities exceeded 1 and were capped");
    }
}

/// Erdős–Rényi G(n, p).
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<SimpleGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("G(n,p) needs 0 <= p <= 1, got {p}")));
    }
    let mut rng = crate::seed::rng_from_seed(seed);
    let group = WeightedGroup::new((0..n as NodeId).map(|i| (i, 1.0)).collect());
    let mut edges = Vec::new();
    sample_pairs(&group, None, p, &mut rng, &mut edges);
    Ok(SimpleGraph::from_edges(n, edges))
}

/// Chung–Lu graph: pair (i, j) with probability `min(1, k_i k_j / Σ k)`.
pub fn chung_lu_sample(degrees: &[usize], seed: u64) -> Result<SimpleGraph> {
    let n = degrees.len();
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return Ok(SimpleGraph::empty(n));
    }
    let mut rng = crate::seed::rng_from_seed(seed);
    let group = WeightedGroup::new(
        degrees
            .iter()
            .enumerate()
            .map(|(i, &k)| (i as NodeId, k as f64))
            .collect(),
    );
    let mut edges = Vec::new();
    let capped = sample_pairs(&group, None, 1.0 / total as f64, &mut rng, &mut edges);
    warn_capped("chung-lu", capped);
    Ok(SimpleGraph::from_edges(n, edges))
}

pub(crate) fn warn_capped_maxent(capped: u64) {
    warn_capped("dcsbm-maxent", capped);
}
