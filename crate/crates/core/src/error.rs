use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("measure undefined: {0}")]
    Undefined(&'static str),

    #[error("insufficient data: {used} usable point(s), at least 2 required")]
    InsufficientData { used: usize },

    #[error("degenerate design: all usable points share the same n")]
    DegenerateDesign,

    #[error("checksum mismatch for {file}: expected {expected}, got {actual}")]
    Checksum {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("network {id}: {source}")]
    Network {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    PathIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("download failed: {0}")]
    Download(String),

    #[error("archive error: {0}")]
    Archive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn with_path(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::PathIo { path, source }
    }

    /// Attach a network id to an error raised while processing that network.
    pub fn in_network(self, id: impl Into<String>) -> Self {
        Error::Network {
            id: id.into(),
            source: Box::new(self),
        }
    }
}
