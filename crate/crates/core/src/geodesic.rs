//! Two-list batch sampling estimator of the mean geodesic distance.
//!
//! Reachable pairs are drawn uniformly at random in batches. The first half
//! of every batch feeds one running list of distances and the second half
//! the other; sampling stops once the two list means agree to within the
//! configured threshold, and the pooled mean is reported.

use rand::Rng as _;
use rand_distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, pairs_in, ComponentPartition, NodeId, SimpleGraph};
use crate::seed::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Pairs per batch; split evenly between the two lists.
    pub batch_size: usize,
    /// Stop when the two list means differ by less than this.
    pub threshold: f64,
    /// Give up (and flag non-convergence) after this many batches.
    pub max_batches: usize,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            batch_size: 1000,
            threshold: 0.1,
            max_batches: 1000,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 || self.batch_size % 2 != 0 {
            return Err(Error::param(format!(
                "batch size must be a positive even number, got {}",
                self.batch_size
            )));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::param(format!("threshold must be > 0, got {}", self.threshold)));
        }
        if self.max_batches == 0 {
            return Err(Error::param("max_batches must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicEstimate {
    pub estimate: f64,
    pub batches_used: usize,
    pub converged: bool,
}

/// Uniform sampler over unordered reachable pairs of distinct nodes.
pub struct PairSampler {
    members: Vec<Vec<NodeId>>,
    pick: Option<WeightedIndex<u64>>,
}

impl PairSampler {
    pub fn new(parts: &ComponentPartition) -> Self {
        let members: Vec<Vec<NodeId>> = parts.members().into_iter().filter(|c| c.len() > 1).collect();
        let pick = WeightedIndex::new(members.iter().map(|c| pairs_in(c.len()))).ok();
        PairSampler { members, pick }
    }

    pub fn has_pairs(&self) -> bool {
        self.pick.is_some()
    }

    /// Component chosen with probability ∝ C(|V_m|, 2), then a uniform
    /// distinct pair inside it.
    pub fn sample(&self, rng: &mut Rng) -> (NodeId, NodeId) {
        let pick = self.pick.as_ref().expect("sampler has no reachable pairs");
        let comp = &self.members[pick.sample(rng)];
        let i = rng.random_range(0..comp.len());
        let mut j = rng.random_range(0..comp.len() - 1);
        if j >= i {
            j += 1;
        }
        (comp[i], comp[j])
    }
}

/// Reusable bidirectional breadth-first search.
pub struct PairDistance {
    seen_fwd: Vec<u32>,
    seen_bwd: Vec<u32>,
    dist_fwd: Vec<u32>,
    dist_bwd: Vec<u32>,
    epoch: u32,
    front_fwd: Vec<NodeId>,
    front_bwd: Vec<NodeId>,
    scratch: Vec<NodeId>,
}

impl PairDistance {
    pub fn new(n: usize) -> Self {
        PairDistance {
            seen_fwd: vec![0; n],
            seen_bwd: vec![0; n],
            dist_fwd: vec![0; n],
            dist_bwd: vec![0; n],
            epoch: 0,
            front_fwd: Vec::new(),
            front_bwd: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen_fwd.fill(0);
            self.seen_bwd.fill(0);
            self.epoch = 1;
        }
    }

    /// Hop distance from `s` to `t`, or `None` if unreachable.
    ///
    /// Grows whichever search frontier is cheaper, one full level at a time;
    /// the first level on which the searches meet fixes the distance.
    pub fn distance(&mut self, g: &SimpleGraph, s: NodeId, t: NodeId) -> Option<u32> {
        if s == t {
            return Some(0);
        }
        self.next_epoch();
        let e = self.epoch;
        self.seen_fwd[s as usize] = e;
        self.dist_fwd[s as usize] = 0;
        self.seen_bwd[t as usize] = e;
        self.dist_bwd[t as usize] = 0;
        self.front_fwd.clear();
        self.front_fwd.push(s);
        self.front_bwd.clear();
        self.front_bwd.push(t);

        let volume = |front: &[NodeId]| -> usize { front.iter().map(|&v| g.degree(v as usize)).sum() };
        while !self.front_fwd.is_empty() && !self.front_bwd.is_empty() {
            let forward = volume(&self.front_fwd) <= volume(&self.front_bwd);
            let (front, seen, dist, other_seen, other_dist) = if forward {
                (&mut self.front_fwd, &mut self.seen_fwd, &mut self.dist_fwd, &self.seen_bwd, &self.dist_bwd)
            } else {
                (&mut self.front_bwd, &mut self.seen_bwd, &mut self.dist_bwd, &self.seen_fwd, &self.dist_fwd)
            };
            self.scratch.clear();
            for &v in front.iter() {
                let dv = dist[v as usize];
                for &w in g.neighbors(v as usize) {
                    let wi = w as usize;
                    if other_seen[wi] == e {
                        return Some(dv + 1 + other_dist[wi]);
                    }
                    if seen[wi] != e {
                        seen[wi] = e;
                        dist[wi] = dv + 1;
                        self.scratch.push(w);
                    }
                }
            }
            std::mem::swap(front, &mut self.scratch);
        }
        None
    }
}

/// Estimate ⟨ℓ⟩ by two-list batch sampling.
///
/// Fails with [`Error::Undefined`] when the graph has no reachable pair.
pub fn estimate_mean_geodesic(g: &SimpleGraph, cfg: &EstimatorConfig) -> Result<GeodesicEstimate> {
    cfg.validate()?;
    let sampler = PairSampler::new(&connected_components(g));
    if !sampler.has_pairs() {
        return Err(Error::Undefined("mean geodesic of a graph with no reachable pair"));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let half = cfg.batch_size / 2;
    let n = g.node_count();
    let (mut sum_a, mut sum_b, mut count) = (0u64, 0u64, 0u64);
    let mut pairs = Vec::with_capacity(cfg.batch_size);
    for batch in 1..=cfg.max_batches {
        pairs.clear();
        pairs.extend((0..cfg.batch_size).map(|_| sampler.sample(&mut rng)));
        let dists: Vec<u32> = pairs
            .par_iter()
            .map_init(
                || PairDistance::new(n),
                |bfs, &(s, t)| bfs.distance(g, s, t).expect("sampled pair lies in one component"),
            )
            .collect();
        sum_a += dists[..half].iter().map(|&d| d as u64).sum::<u64>();
        sum_b += dists[half..].iter().map(|&d| d as u64).sum::<u64>();
        count += half as u64;
        let (mean_a, mean_b) = (sum_a as f64 / count as f64, sum_b as f64 / count as f64);
        let converged = (mean_a - mean_b).abs() < cfg.threshold;
        if converged || batch == cfg.max_batches {
            if !converged {
                log::warn!("geodesic estimate did not converge within {} batches", cfg.max_batches);
            }
            return Ok(GeodesicEstimate {
                estimate: (sum_a + sum_b) as f64 / (2 * count) as f64,
                batches_used: batch,
                converged,
            });
        }
    }
    unreachable!("max_batches >= 1 is validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::mean_geodesic_exact;

    fn cfg(seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn triangle_is_exact_in_one_batch() {
        let k3 = SimpleGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        for seed in 0..5 {
            let est = estimate_mean_geodesic(&k3, &cfg(seed)).unwrap();
            assert_eq!(est.estimate, 1.0);
            assert_eq!(est.batches_used, 1);
            assert!(est.converged);
        }
    }

    #[test]
    fn path_of_three_is_close() {
        let p3 = SimpleGraph::from_edges(3, [(0, 1), (1, 2)]);
        let est = estimate_mean_geodesic(&p3, &cfg(11)).unwrap();
        assert!(est.converged);
        assert!((est.estimate - 4.0 / 3.0).abs() <= 0.1, "{est:?}");
    }

    #[test]
    fn disconnected_graph_samples_reachable_pairs_only() {
        // K3 plus a path of 4 plus isolated nodes
        let g = SimpleGraph::from_edges(10, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (5, 6)]);
        let exact = mean_geodesic_exact(&g).unwrap();
        let est = estimate_mean_geodesic(
            &g,
            &EstimatorConfig {
                threshold: 0.01,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(est.estimate.is_finite());
        assert!((est.estimate - exact).abs() < 0.1, "{} vs {exact}", est.estimate);
    }

    #[test]
    fn deterministic_per_seed() {
        let g = SimpleGraph::from_edges(50, (1..50u32).map(|i| (i - 1, i)));
        let a = estimate_mean_geodesic(&g, &cfg(9)).unwrap();
        let b = estimate_mean_geodesic(&g, &cfg(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn undefined_and_invalid_inputs() {
        assert!(matches!(
            estimate_mean_geodesic(&SimpleGraph::empty(4), &cfg(0)),
            Err(Error::Undefined(_))
        ));
        let k2 = SimpleGraph::from_edges(2, [(0, 1)]);
        for bad in [
            EstimatorConfig { batch_size: 3, ..cfg(0) },
            EstimatorConfig { batch_size: 0, ..cfg(0) },
            EstimatorConfig { threshold: 0.0, ..cfg(0) },
            EstimatorConfig { max_batches: 0, ..cfg(0) },
        ] {
            assert!(matches!(estimate_mean_geodesic(&k2, &bad), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn cap_reports_non_convergence() {
        // a long path has wide distance spread; a tiny threshold cannot be met
        let g = SimpleGraph::from_edges(400, (1..400u32).map(|i| (i - 1, i)));
        let est = estimate_mean_geodesic(
            &g,
            &EstimatorConfig {
                batch_size: 10,
                threshold: 1e-9,
                max_batches: 3,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(est.batches_used, 3);
        assert!(!est.converged);
    }

    #[test]
    fn bidirectional_matches_plain_bfs() {
        let g = SimpleGraph::from_edges(
            12,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 6), (6, 7), (7, 4), (8, 9), (0, 10), (10, 5)],
        );
        let mut bfs = PairDistance::new(12);
        for s in 0..12u32 {
            let reference = plain_bfs(&g, s);
            for t in 0..12u32 {
                assert_eq!(bfs.distance(&g, s, t), reference[t as usize], "{s}->{t}");
            }
        }
    }

    fn plain_bfs(g: &SimpleGraph, s: NodeId) -> Vec<Option<u32>> {
        let mut d = vec![None; g.node_count()];
        d[s as usize] = Some(0);
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            let dv = d[v as usize].unwrap();
            for &w in g.neighbors(v as usize) {
                if d[w as usize].is_none() {
                    d[w as usize] = Some(dv + 1);
                    q.push_back(w);
                }
            }
        }
        d
    }
}
