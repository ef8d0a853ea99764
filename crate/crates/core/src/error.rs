use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input was outside the domain of the operation (non-finite, empty, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An activation or model description violates its invariants.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Experiment or model configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A text record could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A ranking metric is undefined for the given labels.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Training produced a non-finite loss.
    #[error("numerical divergence at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidSpec(_) | Error::Parse { .. } => 2,
            Error::Divergence { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
