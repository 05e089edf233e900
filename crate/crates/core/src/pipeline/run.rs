use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{CorpusManifest, Domain, ManifestEntry};
use crate::error::{Error, Result};
use crate::fit::{fit_with_bootstrap, network_posterior, null_expectation, FitForm, NullConfig, NullExpectation, ScalingFit, DEFAULT_RESAMPLES};
use crate::geodesic::{estimate_mean_geodesic, EstimatorConfig};
use crate::graph::{read_edge_list_file, simplify, ParseOptions, SimplifyStats};
use crate::measures::{
    degree_assortativity, global_clustering, mean_degree, mean_geodesic_exact, Measure, MeasureRecord,
};
use crate::nullmodel::NullModel;
use crate::seed::derive_seed;

/// Largest n for which empirical ⟨ℓ⟩ is computed exactly by default.
pub const DEFAULT_EXACT_PATH_CUTOFF: usize = 20_000;
/// Name of the serialized result bundle inside the output directory.
pub const BUNDLE_FILE: &str = "bundle.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    #[default]
    Domain,
    Subdomain,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "domain" => Ok(GroupBy::Domain),
            "subdomain" | "sub-domain" => Ok(GroupBy::Subdomain),
            _ => Err(Error::param(format!("unknown grouping {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub models: Vec<NullModel>,
    pub null: NullConfig,
    pub group_by: GroupBy,
    pub seed: u64,
    pub exact_path_cutoff: usize,
    pub resamples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            models: NullModel::ALL.to_vec(),
            null: NullConfig::default(),
            group_by: GroupBy::Domain,
            seed: 0,
            exact_path_cutoff: DEFAULT_EXACT_PATH_CUTOFF,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.null.samples == 0 {
            return Err(Error::param("ensemble size must be at least 1"));
        }
        if self.resamples < 2 {
            return Err(Error::param("at least 2 bootstrap resamples are needed"));
        }
        self.null.estimator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeodesicMethod {
    Exact,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkResult {
    pub id: String,
    pub domain: Domain,
    pub subdomain: Option<String>,
    pub stats: SimplifyStats,
    pub record: MeasureRecord,
    pub geodesic_method: GeodesicMethod,
    /// Whether the estimator met its threshold; `None` for exact values.
    pub geodesic_converged: Option<bool>,
    pub nulls: Vec<NullExpectation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

/// One fitted series: a group, a source (empirical or a model) and a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub group: String,
    pub series: String,
    pub measure: Measure,
    pub form: FitForm,
    pub fit: Option<ScalingFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub config: RunConfig,
    pub networks: Vec<NetworkResult>,
    pub failures: Vec<Failure>,
    pub fits: Vec<FitRow>,
}

impl ResultBundle {
    pub fn group_of(&self, net: &NetworkResult) -> String {
        match (self.config.group_by, &net.subdomain) {
            (GroupBy::Subdomain, Some(sub)) => format!("{}/{}", net.domain, sub),
            _ => net.domain.to_string(),
        }
    }

    /// Networks per group, groups in sorted order, networks in manifest order.
    pub fn groups(&self) -> BTreeMap<String, Vec<&NetworkResult>> {
        let mut out: BTreeMap<String, Vec<&NetworkResult>> = BTreeMap::new();
        for net in &self.networks {
            out.entry(self.group_of(net)).or_default().push(net);
        }
        out
    }

    /// `(n, y)` points for a series within a group.
    pub fn points(nets: &[&NetworkResult], series: &str, measure: Measure) -> Vec<(f64, Option<f64>)> {
        nets.iter()
            .map(|net| {
                let y = if series == "empirical" {
                    measure.of(&net.record)
                } else {
                    net.nulls
                        .iter()
                        .find(|e| e.model.name() == series && e.measure == measure)
                        .and_then(|e| e.expected)
                };
                (net.record.n as f64, y)
            })
            .collect()
    }

    /// Recompute `fits` from the current networks, e.g. after filtering them.
    pub fn refit(&mut self) {
        self.fits = compute_fits(self);
    }

    /// Series names present in the run: `empirical`, then each model.
    pub fn series(&self) -> Vec<String> {
        std::iter::once("empirical".to_string())
            .chain(self.config.models.iter().map(|m| m.name().to_string()))
            .collect()
    }
}

fn process_network(entry: &ManifestEntry, config: &RunConfig) -> Result<NetworkResult> {
    let opts = ParseOptions {
        directed: entry.directed,
        weighted: entry.weighted,
        ..ParseOptions::default()
    };
    let raw = read_edge_list_file(&entry.path, &opts)?;
    let simple = simplify(&raw);
    let g = &simple.graph;
    let n = g.node_count();
    let (mean_geodesic, method, converged) = if n <= config.exact_path_cutoff {
        (mean_geodesic_exact(g), GeodesicMethod::Exact, None)
    } else {
        let cfg = EstimatorConfig {
            seed: derive_seed(config.seed, &[entry.id.as_str().into(), "empirical-geodesic".into()]),
            ..config.null.estimator
        };
        match estimate_mean_geodesic(g, &cfg) {
            Ok(est) => (Some(est.estimate), GeodesicMethod::Estimated, Some(est.converged)),
            Err(Error::Undefined(_)) => (None, GeodesicMethod::Estimated, None),
            Err(e) => return Err(e),
        }
    };
    let record = MeasureRecord {
        n,
        m: g.edge_count(),
        mean_degree: mean_degree(g).ok(),
        mean_geodesic,
        clustering: global_clustering(g),
        assortativity: degree_assortativity(g),
        source: "empirical".into(),
        seed: None,
    };

    let null_measures = [Measure::MeanGeodesic, Measure::Clustering, Measure::Assortativity];
    let posterior = if config.models.iter().any(|m| m.needs_partition()) {
        Some(network_posterior(g, &entry.id, &config.null, config.seed)?)
    } else {
        None
    };
    let mut nulls = Vec::new();
    for &model in &config.models {
        nulls.extend(null_expectation(
            g,
            &entry.id,
            model,
            &null_measures,
            &config.null,
            config.seed,
            posterior.as_ref(),
        )?);
    }
    Ok(NetworkResult {
        id: entry.id.clone(),
        domain: entry.domain,
        subdomain: entry.subdomain.clone(),
        stats: simple.stats,
        record,
        geodesic_method: method,
        geodesic_converged: converged,
        nulls,
    })
}

/// Process every network, then fit each measure per group and series.
///
/// A network that fails is recorded in `failures` and left out of the fits;
/// the rest of the corpus still runs.
pub fn run_corpus(manifest: &CorpusManifest, config: &RunConfig) -> Result<ResultBundle> {
    config.validate()?;
    manifest.validate()?;
    let outcomes: Vec<std::result::Result<NetworkResult, Failure>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            log::info!("processing {}", entry.id);
            process_network(entry, config).map_err(|e| {
                let e = e.in_network(&entry.id);
                log::error!("{e}");
                Failure {
                    id: entry.id.clone(),
                    error: e.to_string(),
                }
            })
        })
        .collect();
    let mut networks = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(net) => networks.push(net),
            Err(f) => failures.push(f),
        }
    }
    let mut bundle = ResultBundle {
        config: config.clone(),
        networks,
        failures,
        fits: Vec::new(),
    };
    bundle.refit();
    Ok(bundle)
}

fn compute_fits(bundle: &ResultBundle) -> Vec<FitRow> {
    let mut tasks = Vec::new();
    for (group, nets) in bundle.groups() {
        for series in bundle.series() {
            for measure in Measure::ALL {
                // every null model fixes ⟨k⟩, so only the empirical series is fitted
                if series != "empirical" && measure == Measure::MeanDegree {
                    continue;
                }
                tasks.push((group.clone(), series.clone(), measure, ResultBundle::points(&nets, &series, measure)));
            }
        }
    }
    let seed = bundle.config.seed;
    let resamples = bundle.config.resamples;
    tasks
        .into_iter()
        .map(|(group, series, measure, points)| {
            let form = FitForm::for_measure(measure);
            let fit_seed = derive_seed(
                seed,
                &["fit".into(), group.as_str().into(), series.as_str().into(), measure.name().into()],
            );
            let (fit, error) = match fit_with_bootstrap(&points, form, resamples, fit_seed) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            FitRow {
                group,
                series,
                measure,
                form,
                fit,
                error,
            }
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(Error::with_path(path))?))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    seed_derivation: &'static str,
    networks: usize,
    failures: usize,
}

/// Write every table and the bundle into `out`.
pub fn write_outputs(bundle: &ResultBundle, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(Error::with_path(out))?;

    let mut w = csv::Writer::from_writer(create(&out.join("measures.csv"))?);
    w.write_record([
        "id",
        "domain",
        "subdomain",
        "n",
        "m",
        "mean_degree",
        "mean_geodesic",
        "geodesic_method",
        "clustering",
        "assortativity",
        "self_loops_removed",
        "duplicates_collapsed",
    ])?;
    for net in &bundle.networks {
        let r = &net.record;
        w.write_record([
            net.id.clone(),
            net.domain.to_string(),
            net.subdomain.clone().unwrap_or_default(),
            r.n.to_string(),
            r.m.to_string(),
            opt(r.mean_degree),
            opt(r.mean_geodesic),
            match net.geodesic_method {
                GeodesicMethod::Exact => "exact".into(),
                GeodesicMethod::Estimated => "estimated".into(),
            },
            opt(r.clustering),
            opt(r.assortativity),
            net.stats.self_loops_removed.to_string(),
            net.stats.duplicates_collapsed.to_string(),
        ])?;
    }
    w.flush()?;
    write_json(&out.join("measures.json"), &bundle.networks.iter().map(|n| (&n.id, &n.record)).collect::<Vec<_>>())?;

    let mut w = csv::Writer::from_writer(create(&out.join("null_expectations.csv"))?);
    w.write_record(["id", "model", "measure", "expected", "ensemble_size", "defined_draws"])?;
    let mut draws = csv::Writer::from_writer(create(&out.join("null_draws.csv"))?);
    draws.write_record(["id", "model", "measure", "draw", "value"])?;
    for net in &bundle.networks {
        for e in &net.nulls {
            w.write_record([
                net.id.clone(),
                e.model.to_string(),
                e.measure.to_string(),
                opt(e.expected),
                e.ensemble_size.to_string(),
                e.values.iter().flatten().count().to_string(),
            ])?;
            for (i, v) in e.values.iter().enumerate() {
                draws.write_record([net.id.clone(), e.model.to_string(), e.measure.to_string(), i.to_string(), opt(*v)])?;
            }
        }
    }
    w.flush()?;
    draws.flush()?;

    // one row per group and series, four (a, sd_a, b, sd_b, points) blocks
    let mut w = csv::Writer::from_writer(create(&out.join("fits.csv"))?);
    let mut header = vec!["group".to_string(), "series".to_string()];
    for m in Measure::ALL {
        for col in ["a", "sd_a", "b", "sd_b", "points"] {
            header.push(format!("{m}_{col}"));
        }
    }
    w.write_record(&header)?;
    let mut rows: BTreeMap<(String, usize), Vec<String>> = BTreeMap::new();
    let series = bundle.series();
    for row in &bundle.fits {
        let order = series.iter().position(|s| *s == row.series).unwrap_or(usize::MAX);
        let cells = rows
            .entry((row.group.clone(), order))
            .or_insert_with(|| vec![String::new(); 5 * Measure::ALL.len()]);
        let col = 5 * Measure::ALL.iter().position(|&m| m == row.measure).unwrap();
        if let Some(f) = &row.fit {
            cells[col] = f.a.to_string();
            cells[col + 1] = opt(f.sd_a);
            cells[col + 2] = f.b.to_string();
            cells[col + 3] = opt(f.sd_b);
            cells[col + 4] = f.points_used.to_string();
        }
    }
    for ((group, order), cells) in rows {
        let mut record = vec![group, series[order].clone()];
        record.extend(cells);
        w.write_record(&record)?;
    }
    w.flush()?;
    write_json(&out.join("fits.json"), &bundle.fits)?;

    let mut w = csv::Writer::from_writer(create(&out.join("failures.csv"))?);
    w.write_record(["id", "error"])?;
    for f in &bundle.failures {
        w.write_record([&f.id, &f.error])?;
    }
    w.flush()?;

    write_json(
        &out.join("run_metadata.json"),
        &RunMetadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: &bundle.config,
            seed_derivation: "sha256(seed, network id, model, draw index)",
            networks: bundle.networks.len(),
            failures: bundle.failures.len(),
        },
    )?;
    write_json(&out.join(BUNDLE_FILE), bundle)
}
