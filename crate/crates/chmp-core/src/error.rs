//! Crate-wide error type.

/// Errors reported by construction, solving, recovery, and parsing.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("point set must contain at least one point of dimension at least one")]
    EmptyPointSet,

    #[error("column index {index} out of bounds for {n} columns")]
    IndexOutOfBounds { index: usize, n: usize },

    #[error("line-search direction has zero length (candidate column equals the iterate)")]
    DegenerateDirection,

    #[error("angle undefined: one of the rays has zero length")]
    DegenerateRays,

    #[error("certificate has not been verified against the point set")]
    UnverifiedCertificate,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("recovery weight gamma = {gamma:e} is too close to zero to divide by")]
    DegenerateRecovery { gamma: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
