//! Corpus-level orchestration: manifests, full runs, plot data and corpus
//! download.

mod fetch;
mod manifest;
mod plot;
mod run;

pub use fetch::{fetch_corpus, FetchReport, MARKER_FILE};
pub use manifest::{CorpusManifest, Domain, ManifestEntry};
pub use plot::{emit_plot_data, FIT_LINE_POINTS};
pub use run::{
    run_corpus, write_outputs, Failure, FitRow, GeodesicMethod, GroupBy, NetworkResult, ResultBundle,
    RunConfig, BUNDLE_FILE, DEFAULT_EXACT_PATH_CUTOFF,
};
