use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("index list is not strictly increasing")]
    UnsortedIndices,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive semi-definite (pivot or eigenvalue {value:e})")]
    NotPositiveSemiDefinite { value: f64 },

    #[error("matrix is singular to tolerance (pivot {pivot:e} at position {index})")]
    SingularToTolerance { index: usize, pivot: f64 },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("segment too short: {len} samples, need at least {min}")]
    SegmentTooShort { len: usize, min: usize },

    #[error("series too short: length {len}, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("exhaustive search limited to {max} items, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("sub-solver returned index {index} for a kernel of size {dim}")]
    SubSolverOutOfRange { index: usize, dim: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
