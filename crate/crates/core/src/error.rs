use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the discovery engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no time series found in input")]
    EmptyFile,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("train and test sets are incompatible: {0}")]
    IncompatibleDatasets(String),

    #[error("shapelet of length {shapelet_len} is longer than series of length {series_len}")]
    ShapeletTooLong { shapelet_len: usize, series_len: usize },

    #[error("invalid shapelet: {0}")]
    InvalidShapelet(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient candidates: requested {requested}, found {found}")]
    InsufficientCandidates { requested: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
