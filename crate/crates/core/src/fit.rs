//! Scaling-law fits and null-model expectations.
//!
//! Two forms are fitted by ordinary least squares:
//!
//! * power law `y = a · n^b`, as a straight line in `(log10 n, log10 y)`;
//! * logarithmic `y = a + b · log10 n`, as a straight line in `(log10 n, y)`.
//!
//! Uncertainties come from a case-resampling bootstrap.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{estimate_mean_geodesic, EstimatorConfig};
use crate::graph::SimpleGraph;
use crate::measures::{degree_assortativity, global_clustering, Measure};
use crate::nullmodel::{
    chung_lu_sample, config_model_sample, dcsbm_generate, dcsbm_maxent_sample, dcsbm_repair,
    gen_gnm, gen_gnp, NullModel, DEFAULT_MAX_ATTEMPTS, DEFAULT_SWAPS_PER_EDGE,
};
use crate::sbm::{sample_parameter_sets, PosteriorSample, RunWeighting};
use crate::seed::{derive_seed, rng_from_seed};

/// Bootstrap resamples used unless configured otherwise.
pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitForm {
    PowerLaw,
    Logarithmic,
}

impl FitForm {
    /// The form each measure is fitted with.
    pub fn for_measure(measure: Measure) -> FitForm {
        match measure {
            Measure::MeanDegree | Measure::Clustering => FitForm::PowerLaw,
            Measure::MeanGeodesic | Measure::Assortativity => FitForm::Logarithmic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitForm::PowerLaw => "power-law",
            FitForm::Logarithmic => "logarithmic",
        }
    }

    /// Evaluate the fitted curve at `n`.
    pub fn eval(self, a: f64, b: f64, n: f64) -> f64 {
        match self {
            FitForm::PowerLaw => a * n.powf(b),
            FitForm::Logarithmic => a + b * n.log10(),
        }
    }
}

/// Why a point was left out of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exclusion {
    /// The measure was undefined for this network.
    Undefined,
    /// y ≤ 0 (power-law form only).
    NonPositiveY,
    /// n ≤ 0, or a non-finite value.
    InvalidN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPoint {
    pub index: usize,
    pub reason: Exclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub form: FitForm,
    pub a: f64,
    pub b: f64,
    /// Bootstrap standard deviations; `None` until computed.
    pub sd_a: Option<f64>,
    pub sd_b: Option<f64>,
    pub points_used: usize,
    pub points_excluded: usize,
    pub exclusions: Vec<ExcludedPoint>,
}

/// Points that survive the exclusion rules, transformed to regression
/// coordinates.
fn usable(points: &[(f64, Option<f64>)], form: FitForm) -> (Vec<(f64, f64)>, Vec<ExcludedPoint>) {
    let mut xy = Vec::with_capacity(points.len());
    let mut excluded = Vec::new();
    for (index, &(n, y)) in points.iter().enumerate() {
        let reason = match y {
            _ if !n.is_finite() || n <= 0.0 => Some(Exclusion::InvalidN),
            None => Some(Exclusion::Undefined),
            Some(y) if !y.is_finite() => Some(Exclusion::Undefined),
            Some(y) if form == FitForm::PowerLaw && y <= 0.0 => Some(Exclusion::NonPositiveY),
            Some(_) => None,
        };
        match reason {
            Some(reason) => excluded.push(ExcludedPoint { index, reason }),
            None => {
                let y = y.unwrap();
                let y = match form {
                    FitForm::PowerLaw => y.log10(),
                    FitForm::Logarithmic => y,
                };
                xy.push((n.log10(), y));
            }
        }
    }
    (xy, excluded)
}

/// OLS intercept and slope.
fn ols(xy: &[(f64, f64)]) -> Result<(f64, f64)> {
    if xy.len() < 2 {
        return Err(Error::InsufficientData { used: xy.len() });
    }
    let x0 = xy[0].0;
    if xy.iter().all(|&(x, _)| x == x0) {
        return Err(Error::DegenerateDesign);
    }
    let len = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / len;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / len;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in xy {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

fn coefficients(xy: &[(f64, f64)], form: FitForm) -> Result<(f64, f64)> {
    let (intercept, slope) = ols(xy)?;
    Ok(match form {
        FitForm::PowerLaw => (10f64.powf(intercept), slope),
        FitForm::Logarithmic => (intercept, slope),
    })
}

/// Fit `form` to `(n, y)` points. Undefined or out-of-domain points are
/// excluded and reported.
pub fn fit(points: &[(f64, Option<f64>)], form: FitForm) -> Result<ScalingFit> {
    let (xy, exclusions) = usable(points, form);
    let (a, b) = coefficients(&xy, form)?;
    Ok(ScalingFit {
        form,
        a,
        b,
        sd_a: None,
        sd_b: None,
        points_used: xy.len(),
        points_excluded: exclusions.len(),
        exclusions,
    })
}

pub fn fit_power_law(points: &[(f64, Option<f64>)]) -> Result<ScalingFit> {
    fit(points, FitForm::PowerLaw)
}

pub fn fit_logarithmic(points: &[(f64, Option<f64>)]) -> Result<ScalingFit> {
    fit(points, FitForm::Logarithmic)
}

fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    if count < 2 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (count - 1) as f64).sqrt()
}

/// Case-resampling bootstrap standard deviations of `(a, b)`.
///
/// Each resample draws the usable points with replacement; a resample whose
/// points all share one n is redrawn. Resample `i` uses its own derived
/// seed, so the result does not depend on thread scheduling.
pub fn bootstrap_sd(
    points: &[(f64, Option<f64>)],
    form: FitForm,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if resamples < 2 {
        return Err(Error::param("at least 2 bootstrap resamples are needed"));
    }
    let (xy, _) = usable(points, form);
    coefficients(&xy, form)?;
    let coeffs: Vec<(f64, f64)> = (0..resamples)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(xy.len()),
            |buf, i| {
                let mut rng = rng_from_seed(derive_seed(seed, &["bootstrap".into(), i.into()]));
                loop {
                    buf.clear();
                    buf.extend((0..xy.len()).map(|_| xy[rng.random_range(0..xy.len())]));
                    match coefficients(buf, form) {
                        Ok(c) => return c,
                        Err(Error::DegenerateDesign) => continue,
                        Err(e) => unreachable!("resample of a feasible fit failed: {e}"),
                    }
                }
            },
        )
        .collect();
    Ok((
        sample_sd(coeffs.iter().map(|c| c.0)),
        sample_sd(coeffs.iter().map(|c| c.1)),
    ))
}

/// [`fit`] followed by [`bootstrap_sd`].
pub fn fit_with_bootstrap(
    points: &[(f64, Option<f64>)],
    form: FitForm,
    resamples: usize,
    seed: u64,
) -> Result<ScalingFit> {
    let mut result = fit(points, form)?;
    let (sd_a, sd_b) = bootstrap_sd(points, form, resamples, seed)?;
    result.sd_a = Some(sd_a);
    result.sd_b = Some(sd_b);
    Ok(result)
}

/// Settings for generating null ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullConfig {
    /// Draws per network and model.
    pub samples: usize,
    pub estimator: EstimatorConfig,
    pub swaps_per_edge: usize,
    pub max_attempts: usize,
    /// Block-model inference runs per network.
    pub sbm_runs: usize,
    pub weighting: RunWeighting,
}

impl Default for NullConfig {
    fn default() -> Self {
        NullConfig {
            samples: 50,
            estimator: EstimatorConfig::default(),
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            sbm_runs: 100,
            weighting: RunWeighting::InverseDl,
        }
    }
}

/// Mean of one measure over a null ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullExpectation {
    pub network: String,
    pub model: NullModel,
    pub measure: Measure,
    /// Mean over the draws where the measure is defined.
    pub expected: Option<f64>,
    pub ensemble_size: usize,
    /// Per-draw values in draw order.
    pub values: Vec<Option<f64>>,
}

/// Generate draw `index` of `model` for `g`.
pub fn null_draw(
    g: &SimpleGraph,
    model: NullModel,
    cfg: &NullConfig,
    posterior: Option<&PosteriorSample>,
    index: usize,
    seed: u64,
) -> Result<SimpleGraph> {
    let n = g.node_count();
    let m = g.edge_count();
    let block_params = || {
        let sets = posterior
            .ok_or_else(|| Error::param(format!("{model} needs block-model parameters")))?
            .parameter_sets();
        Ok::<_, Error>(sets[index % sets.len()])
    };
    match model {
        NullModel::Gnm => gen_gnm(n, m, seed),
        NullModel::Gnp => {
            let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
            gen_gnp(n, if pairs > 0.0 { m as f64 / pairs } else { 0.0 }, seed)
        }
        NullModel::Config => config_model_sample(g, cfg.swaps_per_edge, seed),
        NullModel::ChungLu => chung_lu_sample(&g.degree_sequence(), seed),
        NullModel::Dcsbm => {
            let params = block_params()?;
            let (state, _) = dcsbm_generate(params, derive_seed(seed, &["generate".into()]))?;
            let out = dcsbm_repair(state, params, cfg.max_attempts, derive_seed(seed, &["repair".into()]))?;
            if out.deleted > 0 {
                log::debug!("dcsbm draw {index}: deleted {} of {m} edges", out.deleted);
            }
            Ok(out.graph)
        }
        NullModel::DcsbmMaxent => {
            let params = block_params()?.clone().with_maxent_fit();
            dcsbm_maxent_sample(&params, seed)
        }
    }
}

/// Value of `measure` on a null draw. ⟨ℓ⟩ is estimated; C and r are exact.
fn null_measure(g: &SimpleGraph, measure: Measure, estimator: &EstimatorConfig, seed: u64) -> Result<Option<f64>> {
    Ok(match measure {
        Measure::MeanDegree => {
            return Err(Error::param("mean degree is fixed by every null model and is not sampled"))
        }
        Measure::MeanGeodesic => {
            let cfg = EstimatorConfig {
                seed: derive_seed(seed, &["geodesic".into()]),
                ..*estimator
            };
            match estimate_mean_geodesic(g, &cfg) {
                Ok(est) => Some(est.estimate),
                Err(Error::Undefined(_)) => None,
                Err(e) => return Err(e),
            }
        }
        Measure::Clustering => global_clustering(g),
        Measure::Assortativity => degree_assortativity(g),
    })
}

/// Block-model parameter sets for a network, seeded from its id.
pub fn network_posterior(g: &SimpleGraph, network: &str, cfg: &NullConfig, seed: u64) -> Result<PosteriorSample> {
    sample_parameter_sets(
        g,
        cfg.sbm_runs,
        cfg.samples,
        derive_seed(seed, &[network.into(), "sbm".into()]),
        cfg.weighting,
    )
}

/// Expected values of `measures` under `model`, averaged over
/// `cfg.samples` draws. Draw `i` is seeded from `(seed, network, model, i)`.
///
/// Block-model variants take their parameters from `posterior`, or run
/// inference when it is `None`.
pub fn null_expectation(
    g: &SimpleGraph,
    network: &str,
    model: NullModel,
    measures: &[Measure],
    cfg: &NullConfig,
    seed: u64,
    posterior: Option<&PosteriorSample>,
) -> Result<Vec<NullExpectation>> {
    if cfg.samples == 0 {
        return Err(Error::param("null ensembles need at least one sample"));
    }
    cfg.estimator.validate()?;
    if measures.contains(&Measure::MeanDegree) {
        return Err(Error::param("mean degree is fixed by every null model and is not sampled"));
    }
    let owned;
    let posterior = match posterior {
        None if model.needs_partition() => {
            owned = network_posterior(g, network, cfg, seed)?;
            Some(&owned)
        }
        p => p,
    };
    let draws: Vec<Vec<Option<f64>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let draw_seed = derive_seed(seed, &[network.into(), model.name().into(), i.into()]);
            let h = null_draw(g, model, cfg, posterior, i, draw_seed)?;
            measures
                .iter()
                .map(|&measure| null_measure(&h, measure, &cfg.estimator, draw_seed))
                .collect()
        })
        .collect::<Result<_>>()
        .map_err(|e| e.in_network(network))?;
    Ok(measures
        .iter()
        .enumerate()
        .map(|(j, &measure)| {
            let values: Vec<Option<f64>> = draws.iter().map(|d| d[j]).collect();
            let defined: Vec<f64> = values.iter().flatten().copied().collect();
            let expected = if defined.is_empty() {
                None
            } else {
                Some(defined.iter().sum::<f64>() / defined.len() as f64)
            };
            NullExpectation {
                network: network.to_string(),
                model,
                measure,
                expected,
                ensemble_size: cfg.samples,
                values,
            }
        })
        .collect())
}
