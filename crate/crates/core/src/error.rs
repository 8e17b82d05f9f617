use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid profile, config or policy parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Data that makes a statistic undefined (zero variance, empty groups).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A metric was requested that the log cannot support.
    #[error("metric error: {0}")]
    Metric(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 configuration, 2 I/O, 3 degenerate data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::DimensionMismatch { .. } => 1,
            Error::Json(_) => 1,
            Error::Io { .. } | Error::Csv(_) => 2,
            Error::DegenerateData(_) | Error::Metric(_) | Error::Aggregation(_) => 3,
        }
    }
}
