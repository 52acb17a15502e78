use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Schema { path: PathBuf, line: usize, message: String },

    #[error("dataset error: {0}")]
    Data(String),

    #[error("eigensolver failed for block {block}: {message}")]
    Eigensolver { block: String, message: String },

    #[error("overlap tracking ambiguous at grid point {index}: best overlap {overlap:.3}")]
    TrackingAmbiguous { index: usize, overlap: f64 },

    #[error("no audited route between {from} and {to}")]
    RouteNotFound { from: String, to: String },

    #[error("level {0} not found")]
    UnknownLevel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("plan error: {0}")]
    Plan(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::UnknownLevel(_) => 2,
            Error::Schema { .. } | Error::Data(_) | Error::Io { .. } | Error::Json(_) => 3,
            Error::Plan(_) | Error::RouteNotFound { .. } | Error::DimensionMismatch { .. } => 3,
            Error::Eigensolver { .. } | Error::TrackingAmbiguous { .. } => 4,
        }
    }
}
