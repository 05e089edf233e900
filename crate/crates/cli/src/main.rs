use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use netscale::fit::{fit_with_bootstrap, FitForm, NullConfig, DEFAULT_RESAMPLES};
use netscale::geodesic::{estimate_mean_geodesic, EstimatorConfig};
use netscale::graph::{read_edge_list_file, simplify, ParseOptions, Simplified};
use netscale::measures::{degree_assortativity, global_clustering, mean_degree, mean_geodesic_exact, MeasureRecord};
use netscale::nullmodel::{NullModel, DEFAULT_MAX_ATTEMPTS, DEFAULT_SWAPS_PER_EDGE};
use netscale::pipeline::{
    emit_plot_data, fetch_corpus, run_corpus, write_outputs, CorpusManifest, GroupBy, ResultBundle, RunConfig,
    BUNDLE_FILE, DEFAULT_EXACT_PATH_CUTOFF,
};
use netscale::sbm::{sample_parameter_sets, RunWeighting};

#[derive(Parser)]
#[command(name = "netscale", version, about = "Scaling laws of networks against random-graph null models")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce an edge list to a simple undirected graph.
    Simplify(SimplifyArgs),
    /// Compute ⟨k⟩, ⟨ℓ⟩, C and r for one network.
    Measure(MeasureArgs),
    /// Draw random graphs matched to a network.
    Nullmodel(NullmodelArgs),
    /// Infer degree-corrected block-model partitions.
    InferSbm(InferArgs),
    /// Fit a scaling law to (n, y) points.
    Fit(FitArgs),
    /// Run the full pipeline over a corpus manifest.
    Run(RunArgs),
    /// Download or copy a corpus archive, verify and unpack it.
    FetchCorpus(FetchArgs),
    /// Write scatter and fit-line CSVs from a run's result bundle.
    PlotData(PlotArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Edge list, optionally gzip-compressed.
    #[arg(long, short)]
    input: PathBuf,
    /// Treat edges as directed before symmetrizing.
    #[arg(long)]
    directed: bool,
    /// Read a third column as a weight.
    #[arg(long)]
    weighted: bool,
    /// Field separator (default: whitespace).
    #[arg(long)]
    delimiter: Option<char>,
}

impl InputArgs {
    fn load(&self) -> Result<Simplified> {
        let opts = ParseOptions {
            delimiter: self.delimiter,
            weighted: self.weighted,
            directed: self.directed,
            ..ParseOptions::default()
        };
        let raw = read_edge_list_file(&self.input, &opts).with_context(|| format!("reading {}", self.input.display()))?;
        Ok(simplify(&raw))
    }
}

#[derive(Args, Clone, Copy)]
struct EstimatorArgs {
    /// Sampled pairs per estimator batch (even).
    #[arg(long, default_value_t = 1000)]
    batch_size: usize,
    /// Stop when the two list means differ by less than this.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    #[arg(long, default_value_t = 1000)]
    max_batches: usize,
}

impl EstimatorArgs {
    fn config(self, seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            batch_size: self.batch_size,
            threshold: self.threshold,
            max_batches: self.max_batches,
            seed,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct NullArgs {
    /// Draws per network and model.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SWAPS_PER_EDGE)]
    swaps_per_edge: usize,
    /// Rejected repair swaps before an offending edge is deleted.
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: usize,
    /// Block-model inference runs per network.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, value_enum, default_value_t = Weighting::InverseDl)]
    weighting: Weighting,
}

impl NullArgs {
    fn config(self, estimator: EstimatorConfig) -> NullConfig {
        NullConfig {
            samples: self.samples,
            estimator,
            swaps_per_edge: self.swaps_per_edge,
            max_attempts: self.max_attempts,
            sbm_runs: self.runs,
            weighting: self.weighting.into(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    InverseDl,
    Boltzmann,
}

impl From<Weighting> for RunWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::InverseDl => RunWeighting::InverseDl,
            Weighting::Boltzmann => RunWeighting::Boltzmann,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    PowerLaw,
    Logarithmic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grouping {
    Domain,
    Subdomain,
}

#[derive(Args)]
struct SimplifyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output edge list (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write the index-to-label table here.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Write original labels instead of dense indices.
    #[arg(long)]
    keep_labels: bool,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Compute ⟨ℓ⟩ exactly up to this many nodes, estimate above.
    #[arg(long, default_value_t = DEFAULT_EXACT_PATH_CUTOFF)]
    exact_path_cutoff: usize,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NullmodelArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    model: NullModel,
    #[command(flatten)]
    null: NullArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for draw_NNN.txt edge lists.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Parameter sets drawn from the runs.
    #[arg(long, default_value_t = 50)]
    posterior_samples: usize,
    #[arg(long, value_enum, default_value_t = Weighting::InverseDl)]
    weighting: Weighting,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns `n` and `y`; blank y means undefined.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    form: Form,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Corpus manifest (CSV, or JSON by extension).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated null models.
    #[arg(long, value_delimiter = ',', default_value = "gnm,gnp,config,chung-lu,dcsbm,dcsbm-maxent")]
    models: Vec<NullModel>,
    #[arg(long, value_enum, default_value_t = Grouping::Domain)]
    group_by: Grouping,
    #[arg(long, default_value_t = DEFAULT_EXACT_PATH_CUTOFF)]
    exact_path_cutoff: usize,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,
    #[command(flatten)]
    null: NullArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Also write plot data into OUT/plot.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct FetchArgs {
    /// Archive URL or local path (.zip, .tar.gz or .tar).
    #[arg(long)]
    source: String,
    /// sha256sum-style checksum file.
    #[arg(long)]
    checksums: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Result bundle file, or the run output directory holding it.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_simplify(a: SimplifyArgs) -> Result<()> {
    let s = a.input.load()?;
    let mut w = writer(a.out.as_deref())?;
    s.graph.write_edge_list(&mut w, a.keep_labels.then_some(&s.labels))?;
    w.flush()?;
    if let Some(p) = &a.labels {
        s.labels.write_tsv(BufWriter::new(File::create(p)?))?;
    }
    eprintln!("{}", serde_json::to_string(&s.stats)?);
    Ok(())
}

#[derive(Serialize)]
struct MeasureOutput {
    #[serde(flatten)]
    record: MeasureRecord,
    geodesic_method: &'static str,
    geodesic_converged: Option<bool>,
}

fn cmd_measure(a: MeasureArgs) -> Result<()> {
    let s = a.input.load()?;
    let g = &s.graph;
    let (mean_geodesic, method, converged) = if g.node_count() <= a.exact_path_cutoff {
        (mean_geodesic_exact(g), "exact", None)
    } else {
        match estimate_mean_geodesic(g, &a.estimator.config(a.seed)) {
            Ok(e) => (Some(e.estimate), "estimated", Some(e.converged)),
            Err(netscale::Error::Undefined(_)) => (None, "estimated", None),
            Err(e) => return Err(e.into()),
        }
    };
    let out = MeasureOutput {
        record: MeasureRecord {
            n: g.node_count(),
            m: g.edge_count(),
            mean_degree: mean_degree(g).ok(),
            mean_geodesic,
            clustering: global_clustering(g),
            assortativity: degree_assortativity(g),
            source: "empirical".into(),
            seed: converged.map(|_| a.seed),
        },
        geodesic_method: method,
        geodesic_converged: converged,
    };
    match a.format {
        Format::Json => emit_json(a.out.as_deref(), &out),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer(a.out.as_deref())?);
            let mut header = MeasureRecord::CSV_HEADER.to_vec();
            header.extend(["geodesic_method", "geodesic_converged"]);
            w.write_record(&header)?;
            let r = &out.record;
            let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                r.n.to_string(),
                r.m.to_string(),
                cell(r.mean_degree),
                cell(r.mean_geodesic),
                cell(r.clustering),
                cell(r.assortativity),
                r.source.clone(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                out.geodesic_method.to_string(),
                out.geodesic_converged.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
            w.flush()?;
            Ok(())
        }
    }
}

fn cmd_nullmodel(a: NullmodelArgs) -> Result<()> {
    let s = a.input.load()?;
    let cfg = a.null.config(EstimatorConfig::default());
    let posterior = if a.model.needs_partition() {
        let id = a.input.input.to_string_lossy();
        Some(netscale::fit::network_posterior(&s.graph, &id, &cfg, a.seed)?)
    } else {
        None
    };
    std::fs::create_dir_all(&a.out)?;
    for i in 0..cfg.samples {
        let seed = netscale::seed::derive_seed(a.seed, &[a.model.name().into(), i.into()]);
        let h = netscale::fit::null_draw(&s.graph, a.model, &cfg, posterior.as_ref(), i, seed)?;
        let path = a.out.join(format!("draw_{i:03}.txt"));
        let mut w = BufWriter::new(File::create(&path)?);
        h.write_edge_list(&mut w, Some(&s.labels))?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_infer(a: InferArgs) -> Result<()> {
    let s = a.input.load()?;
    let post = sample_parameter_sets(&s.graph, a.runs, a.posterior_samples, a.seed, a.weighting.into())?;
    #[derive(Serialize)]
    struct Out<'a> {
        node_labels: &'a [String],
        #[serde(flatten)]
        posterior: &'a netscale::sbm::PosteriorSample,
    }
    emit_json(
        a.out.as_deref(),
        &Out {
            node_labels: s.labels.labels(),
            posterior: &post,
        },
    )
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ni), Some(yi)) = (col("n"), col("y")) else {
        bail!("{} needs columns n and y", a.input.display());
    };
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let n: f64 = rec[ni].parse().with_context(|| format!("row {}: bad n", line + 1))?;
        let y = match &rec[yi] {
            "" => None,
            v => Some(v.parse::<f64>().with_context(|| format!("row {}: bad y", line + 1))?),
        };
        points.push((n, y));
    }
    let form = match a.form {
        Form::PowerLaw => FitForm::PowerLaw,
        Form::Logarithmic => FitForm::Logarithmic,
    };
    let fit = fit_with_bootstrap(&points, form, a.resamples, a.seed)?;
    emit_json(a.out.as_deref(), &fit)
}

/// Returns whether any network failed.
fn cmd_run(a: RunArgs) -> Result<bool> {
    let manifest = CorpusManifest::load(&a.manifest)?;
    let config = RunConfig {
        models: a.models,
        null: a.null.config(a.estimator.config(0)),
        group_by: match a.group_by {
            Grouping::Domain => GroupBy::Domain,
            Grouping::Subdomain => GroupBy::Subdomain,
        },
        seed: a.seed,
        exact_path_cutoff: a.exact_path_cutoff,
        resamples: a.resamples,
    };
    let bundle = run_corpus(&manifest, &config)?;
    write_outputs(&bundle, &a.out)?;
    if a.plot {
        emit_plot_data(&bundle, &a.out.join("plot"))?;
    }
    for f in &bundle.failures {
        eprintln!("failed: {}", f.error);
    }
    eprintln!("{} network(s) processed, {} failed", bundle.networks.len(), bundle.failures.len());
    Ok(!bundle.failures.is_empty())
}

fn cmd_fetch(a: FetchArgs) -> Result<()> {
    let r = fetch_corpus(&a.source, &a.checksums, &a.out)?;
    if r.downloaded {
        eprintln!("unpacked {} network file(s) into {}", r.files, r.dest.display());
    } else {
        eprintln!("{} is already complete ({} network files)", r.dest.display(), r.files);
    }
    if let Some(stub) = r.stub {
        eprintln!("wrote manifest stub {}; fill in the domain column before running", stub.display());
    }
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let path = if a.bundle.is_dir() { a.bundle.join(BUNDLE_FILE) } else { a.bundle };
    let bundle: ResultBundle = serde_json::from_reader(io::BufReader::new(
        File::open(&path).with_context(|| format!("opening {}", path.display()))?,
    ))?;
    let files = emit_plot_data(&bundle, &a.out)?;
    eprintln!("wrote {} file(s) to {}", files.len(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Simplify(a) => cmd_simplify(a).map(|_| false),
        Command::Measure(a) => cmd_measure(a).map(|_| false),
        Command::Nullmodel(a) => cmd_nullmodel(a).map(|_| false),
        Command::InferSbm(a) => cmd_infer(a).map(|_| false),
        Command::Fit(a) => cmd_fit(a).map(|_| false),
        Command::Run(a) => cmd_run(a),
        Command::FetchCorpus(a) => cmd_fetch(a).map(|_| false),
        Command::PlotData(a) => cmd_plot(a).map(|_| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
