use thiserror::Error;

/// Errors produced by the geometry, depth, transport and harness routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("size mismatch: reference has {reference} points, target has {target}")]
    SizeMismatch { reference: usize, target: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("non-finite coordinate at position {0}")]
    NonFinite(usize),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large: n = {n} exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("general position not reached after {0} perturbation attempts")]
    RetryLimit(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
