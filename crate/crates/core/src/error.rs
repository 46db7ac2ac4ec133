use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model has no terms")]
    EmptyModel,

    #[error("term {term} is {rows}x{cols}, not square")]
    NonSquare { term: usize, rows: usize, cols: usize },

    #[error("term {term} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        term: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),

    #[error("term {term} is not Hermitian (max |h - h†| = {deviation:e})")]
    NonHermitian { term: usize, deviation: f64 },

    #[error("term {term} has zero norm; its sampling probability would be undefined")]
    ZeroNormTerm { term: usize },

    #[error("eigenvalue {eigenvalue} lies outside [0, 2π); normalize the spectrum first")]
    SpectrumOutOfRange { eigenvalue: f64 },

    #[error("vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("empty set")]
    EmptySet,

    #[error("residual {requested} is unreachable (largest achievable is {max})")]
    UnreachableResidual { requested: f64, max: f64 },

    #[error("bound is undefined here: {0}")]
    BoundDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
