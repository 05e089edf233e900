//! Degree-corrected block-model inference.
//!
//! Partitions are scored by a description length: the negative
//! degree-corrected log-likelihood of the observed block edge counts plus a
//! penalty for the block matrix and the node labels,
//!
//! ```text
//! DL = −½ Σ_{r,s} e_rs ln(e_rs / (e_r e_s)) + B(B+1)/2 · ln m + n ln B
//! ```
//!
//! where the sum runs over ordered block pairs and `e_rr` counts each
//! within-block edge twice. [`infer_partition`] minimizes it greedily with
//! single-node moves and block merges; [`sample_parameter_sets`] repeats the
//! search and resamples the results weighted by description length.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::nullmodel::BlockModelParams;
use crate::seed::{derive_seed, rng_from_seed};

/// Improvements smaller than this are treated as ties.
const TOLERANCE: f64 = 1e-9;
const MAX_SWEEPS: usize = 10_000;

#[inline]
fn xlnx(x: u64) -> f64 {
    if x == 0 {
        0.0
    } else {
        let x = x as f64;
        x * x.ln()
    }
}

fn penalty(blocks: usize, n: usize, m: usize) -> f64 {
    let b = blocks as f64;
    b * (b + 1.0) / 2.0 * (m as f64).ln() + n as f64 * b.ln()
}

/// Description length of `g` partitioned by `labels`.
///
/// `B` is the number of distinct labels in use, so the value does not
/// depend on how blocks are numbered.
pub fn description_length(g: &SimpleGraph, labels: &[u32]) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined("description length of a graph without edges"));
    }
    let params = BlockModelParams::from_graph(g, labels)?;
    let totals = params.block_totals();
    let mut used = vec![false; params.block_count()];
    for &b in labels {
        used[b as usize] = true;
    }
    let blocks = used.iter().filter(|&&u| u).count();
    let ends: f64 = params.block_edges.iter().flatten().map(|&x| xlnx(x)).sum();
    let likelihood = totals.iter().map(|&t| xlnx(t)).sum::<f64>() - 0.5 * ends;
    Ok(likelihood + penalty(blocks, g.node_count(), g.edge_count()))
}

/// One inference result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRun {
    pub params: BlockModelParams,
    pub description_length: f64,
    pub run_index: usize,
    pub seed: u64,
}

struct Search<'g> {
    g: &'g SimpleGraph,
    labels: Vec<u32>,
    members: Vec<Vec<u32>>,
    /// Dense, symmetric, stub convention.
    e: Vec<u64>,
    totals: Vec<u64>,
    width: usize,
    nonempty: usize,
    // scratch for neighbor block counts
    counts: Vec<u64>,
    touched: Vec<u32>,
}

impl<'g> Search<'g> {
    fn new(g: &'g SimpleGraph, labels: Vec<u32>, width: usize) -> Self {
        let mut members = vec![Vec::new(); width];
        for (i, &b) in labels.iter().enumerate() {
            members[b as usize].push(i as u32);
        }
        let mut e = vec![0u64; width * width];
        let mut totals = vec![0u64; width];
        for (u, v) in g.edges() {
            let (r, s) = (labels[u as usize] as usize, labels[v as usize] as usize);
            e[r * width + s] += 1;
            e[s * width + r] += 1;
            totals[r] += 1;
            totals[s] += 1;
        }
        let nonempty = members.iter().filter(|m| !m.is_empty()).count();
        Search {
            g,
            labels,
            members,
            e,
            totals,
            width,
            nonempty,
            counts: vec![0; width],
            touched: Vec::new(),
        }
    }

    #[inline]
    fn at(&self, r: usize, s: usize) -> u64 {
        self.e[r * self.width + s]
    }

    fn dl(&self) -> f64 {
        let ends: f64 = self.e.iter().map(|&x| xlnx(x)).sum();
        let likelihood = self.totals.iter().map(|&t| xlnx(t)).sum::<f64>() - 0.5 * ends;
        likelihood + penalty(self.nonempty, self.g.node_count(), self.g.edge_count())
    }

    fn gather_neighbor_blocks(&mut self, v: usize) {
        for &b in &self.touched {
            self.counts[b as usize] = 0;
        }
        self.touched.clear();
        for &w in self.g.neighbors(v) {
            let b = self.labels[w as usize];
            if self.counts[b as usize] == 0 {
                self.touched.push(b);
            }
            self.counts[b as usize] += 1;
        }
    }

    /// Change in DL from moving `v` (from block `r`) to block `t`.
    /// Requires `gather_neighbor_blocks(v)`.
    fn move_delta(&self, v: usize, r: usize, t: usize) -> f64 {
        let k = self.g.degree(v) as u64;
        let c = |s: usize| self.counts[s];
        let (cr, ct) = (c(r), c(t));
        let mut d_ends = 0.0;
        for &s in &self.touched {
            let s = s as usize;
            if s == r || s == t {
                continue;
            }
            let cs = c(s);
            d_ends += 2.0
                * (xlnx(self.at(r, s) - cs) - xlnx(self.at(r, s)) + xlnx(self.at(t, s) + cs)
                    - xlnx(self.at(t, s)));
        }
        d_ends += xlnx(self.at(r, r) - 2 * cr) - xlnx(self.at(r, r));
        d_ends += xlnx(self.at(t, t) + 2 * ct) - xlnx(self.at(t, t));
        d_ends += 2.0 * (xlnx(self.at(r, t) + cr - ct) - xlnx(self.at(r, t)));
        let d_totals = xlnx(self.totals[r] - k) - xlnx(self.totals[r]) + xlnx(self.totals[t] + k)
            - xlnx(self.totals[t]);
        let mut d = d_totals - 0.5 * d_ends;
        let emptied = self.members[r].len() == 1;
        let filled = self.members[t].is_empty();
        let after = self.nonempty + filled as usize - emptied as usize;
        if after != self.nonempty {
            let (n, m) = (self.g.node_count(), self.g.edge_count());
            d += penalty(after, n, m) - penalty(self.nonempty, n, m);
        }
        d
    }

    /// Requires `gather_neighbor_blocks(v)`.
    fn apply_move(&mut self, v: usize, r: usize, t: usize) {
        let w = self.width;
        let k = self.g.degree(v) as u64;
        let (cr, ct) = (self.counts[r], self.counts[t]);
        for i in 0..self.touched.len() {
            let s = self.touched[i] as usize;
            if s == r || s == t {
                continue;
            }
            let cs = self.counts[s];
            self.e[r * w + s] -= cs;
            self.e[s * w + r] -= cs;
            self.e[t * w + s] += cs;
            self.e[s * w + t] += cs;
        }
        self.e[r * w + r] -= 2 * cr;
        self.e[t * w + t] += 2 * ct;
        let rt = self.e[r * w + t] + cr - ct;
        self.e[r * w + t] = rt;
        self.e[t * w + r] = rt;
        self.totals[r] -= k;
        self.totals[t] += k;
        if self.members[t].is_empty() {
            self.nonempty += 1;
        }
        let pos = self.members[r].iter().position(|&x| x as usize == v).unwrap();
        self.members[r].swap_remove(pos);
        if self.members[r].is_empty() {
            self.nonempty -= 1;
        }
        self.members[t].push(v as u32);
        self.labels[v] = t as u32;
    }

    /// Sweep nodes in random order, moving each to its best neighboring
    /// block while that strictly lowers DL. Returns the number of moves.
    fn node_moves(&mut self, rng: &mut crate::seed::Rng) -> usize {
        let mut order: Vec<usize> = (0..self.g.node_count()).collect();
        let mut total = 0;
        for _ in 0..MAX_SWEEPS {
            order.shuffle(rng);
            let mut moved = 0;
            for &v in &order {
                let r = self.labels[v] as usize;
                self.gather_neighbor_blocks(v);
                let mut best = (-TOLERANCE, usize::MAX);
                for &t in &self.touched {
                    let t = t as usize;
                    if t == r {
                        continue;
                    }
                    let d = self.move_delta(v, r, t);
                    if d < best.0 {
                        best = (d, t);
                    }
                }
                if best.1 != usize::MAX {
                    self.apply_move(v, r, best.1);
                    moved += 1;
                }
            }
            total += moved;
            if moved == 0 {
                break;
            }
        }
        total
    }

    fn merge_delta(&self, r: usize, s: usize) -> f64 {
        let mut d_ends = 0.0;
        for u in 0..self.width {
            if u == r || u == s {
                continue;
            }
            let (a, b) = (self.at(r, u), self.at(s, u));
            if a + b > 0 {
                d_ends += 2.0 * (xlnx(a + b) - xlnx(a) - xlnx(b));
            }
        }
        let (rr, ss, rs) = (self.at(r, r), self.at(s, s), self.at(r, s));
        d_ends += xlnx(rr + ss + 2 * rs) - xlnx(rr) - xlnx(ss) - 2.0 * xlnx(rs);
        let (tr, ts) = (self.totals[r], self.totals[s]);
        let d_totals = xlnx(tr + ts) - xlnx(tr) - xlnx(ts);
        let (n, m) = (self.g.node_count(), self.g.edge_count());
        d_totals - 0.5 * d_ends + penalty(self.nonempty - 1, n, m) - penalty(self.nonempty, n, m)
    }

    /// Fold block `s` into block `r`.
    fn apply_merge(&mut self, r: usize, s: usize) {
        let w = self.width;
        let (rr, ss, rs) = (self.at(r, r), self.at(s, s), self.at(r, s));
        for u in 0..w {
            if u == r || u == s {
                continue;
            }
            let x = self.e[r * w + u] + self.e[s * w + u];
            self.e[r * w + u] = x;
            self.e[u * w + r] = x;
            self.e[s * w + u] = 0;
            self.e[u * w + s] = 0;
        }
        self.e[r * w + r] = rr + ss + 2 * rs;
        self.e[s * w + s] = 0;
        self.e[r * w + s] = 0;
        self.e[s * w + r] = 0;
        self.totals[r] += self.totals[s];
        self.totals[s] = 0;
        let moved = std::mem::take(&mut self.members[s]);
        for &v in &moved {
            self.labels[v as usize] = r as u32;
        }
        self.members[r].extend(moved);
        self.nonempty -= 1;
    }

    /// Evaluate every pair of blocks, then apply merges from most to least
    /// favorable, re-checking each against the current state. Each block
    /// takes part in at most one merge per round.
    fn merges(&mut self) -> usize {
        let live: Vec<usize> = (0..self.width).filter(|&b| !self.members[b].is_empty()).collect();
        let mut candidates = Vec::new();
        for (i, &r) in live.iter().enumerate() {
            for &s in &live[i + 1..] {
                let d = self.merge_delta(r, s);
                if d < -TOLERANCE {
                    candidates.push((d, r, s));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut used = vec![false; self.width];
        let mut applied = 0;
        for (_, r, s) in candidates {
            if used[r] || used[s] || self.nonempty < 2 {
                continue;
            }
            if self.merge_delta(r, s) < -TOLERANCE {
                self.apply_merge(r, s);
                used[r] = true;
                used[s] = true;
                applied += 1;
            }
        }
        applied
    }

    /// Merge the least costly pair repeatedly down to one block, whether or
    /// not each step helps, and return the labels of the best state seen if
    /// it beats the current one.
    fn collapse_scan(&self) -> Option<Vec<u32>> {
        let start = self.dl();
        let mut scan = Search::new(self.g, self.labels.clone(), self.width);
        let mut best: Option<(f64, Vec<u32>)> = None;
        while scan.nonempty > 1 {
            let live: Vec<usize> = (0..scan.width).filter(|&b| !scan.members[b].is_empty()).collect();
            let mut pick = (f64::INFINITY, 0, 0);
            for (i, &r) in live.iter().enumerate() {
                for &s in &live[i + 1..] {
                    let d = scan.merge_delta(r, s);
                    if d < pick.0 {
                        pick = (d, r, s);
                    }
                }
            }
            scan.apply_merge(pick.1, pick.2);
            let dl = scan.dl();
            if dl < start - TOLERANCE && best.as_ref().is_none_or(|b| dl < b.0) {
                best = Some((dl, scan.labels.clone()));
            }
        }
        best.map(|b| b.1)
    }

    /// Labels renumbered 0..B in order of first appearance.
    fn compact_labels(&self) -> Vec<u32> {
        let mut map = vec![u32::MAX; self.width];
        let mut next = 0;
        self.labels
            .iter()
            .map(|&b| {
                let slot = &mut map[b as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect()
    }
}

/// Greedy description-length minimization from a random start.
///
/// Starts from `ceil(√n)` blocks with random labels, then alternates rounds
/// of single-node moves (to blocks of a node's neighbors) and block merges
/// until neither lowers the description length. A converged state is then
/// collapsed pair by pair down to one block; if any coarser state scores
/// better, the search resumes from it. The returned labels are a local
/// minimum under single-node moves.
pub fn infer_partition(g: &SimpleGraph, seed: u64) -> Result<InferenceRun> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined("block-model inference needs at least one edge"));
    }
    let n = g.node_count();
    let width = ((n as f64).sqrt().ceil() as usize).max(1);
    let mut rng = rng_from_seed(seed);
    let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..width as u32)).collect();
    let mut search = Search::new(g, labels, width);
    loop {
        search.node_moves(&mut rng);
        if search.merges() > 0 {
            continue;
        }
        match search.collapse_scan() {
            Some(labels) => search = Search::new(g, labels, width),
            None => break,
        }
    }
    let labels = search.compact_labels();
    let dl = description_length(g, &labels)?;
    debug_assert!((dl - search.dl()).abs() <= 1e-6 * dl.abs().max(1.0));
    let mut params = BlockModelParams::from_graph(g, &labels)?;
    params.description_length = Some(dl);
    Ok(InferenceRun {
        params,
        description_length: dl,
        run_index: 0,
        seed,
    })
}

/// How inference runs are weighted when resampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunWeighting {
    /// w ∝ 1 / DL
    #[default]
    InverseDl,
    /// w ∝ exp(−(DL − DL_min))
    Boltzmann,
}

impl std::str::FromStr for RunWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-dl" => Ok(RunWeighting::InverseDl),
            "boltzmann" => Ok(RunWeighting::Boltzmann),
            _ => Err(Error::param(format!("unknown run weighting {s:?}"))),
        }
    }
}

/// Selection probabilities for runs with the given description lengths.
pub fn run_weights(dls: &[f64], weighting: RunWeighting) -> Result<Vec<f64>> {
    if dls.iter().any(|&d| !d.is_finite()) {
        return Err(Error::param("description lengths must be finite"));
    }
    let raw: Vec<f64> = match weighting {
        RunWeighting::InverseDl => {
            if dls.iter().any(|&d| d <= 0.0) {
                return Err(Error::param("inverse weighting needs positive description lengths"));
            }
            dls.iter().map(|&d| 1.0 / d).collect()
        }
        RunWeighting::Boltzmann => {
            let min = dls.iter().copied().fold(f64::INFINITY, f64::min);
            dls.iter().map(|&d| (-(d - min)).exp()).collect()
        }
    };
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// All inference runs plus the resampled selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub runs: Vec<InferenceRun>,
    pub weighting: RunWeighting,
    /// Indices into `runs`, in draw order.
    pub selected: Vec<usize>,
}

impl PosteriorSample {
    pub fn parameter_sets(&self) -> Vec<&BlockModelParams> {
        self.selected.iter().map(|&i| &self.runs[i].params).collect()
    }
}

/// Run inference `runs` times with derived seeds and draw `samples`
/// parameter sets with replacement, weighted by description length.
pub fn sample_parameter_sets(
    g: &SimpleGraph,
    runs: usize,
    samples: usize,
    seed: u64,
    weighting: RunWeighting,
) -> Result<PosteriorSample> {
    if runs == 0 || samples == 0 {
        return Err(Error::param("runs and samples must both be at least 1"));
    }
    let results: Vec<InferenceRun> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let run_seed = derive_seed(seed, &["sbm-run".into(), i.into()]);
            infer_partition(g, run_seed).map(|mut r| {
                r.run_index = i;
                r
            })
        })
        .collect::<Result<_>>()?;
    let dls: Vec<f64> = results.iter().map(|r| r.description_length).collect();
    let weights = run_weights(&dls, weighting)?;
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = rng_from_seed(derive_seed(seed, &["sbm-select".into()]));
    let selected = (0..samples).map(|_| pick.sample(&mut rng)).collect();
    Ok(PosteriorSample {
        runs: results,
        weighting,
        selected,
    })
}
