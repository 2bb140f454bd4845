use thiserror::Error;

/// Errors raised by tensor and geometry operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NordenError {
    #[error("invalid rank: {0}")]
    InvalidRank(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid slot {slot} for tensor of rank {rank}")]
    InvalidSlot { slot: usize, rank: usize },
    #[error("unsupported variance: {0}")]
    UnsupportedVariance(String),
    #[error("metric is singular and has no inverse")]
    NoInverse,
    #[error("dimension too small: need 2n >= {required}, got {found}")]
    DimensionTooSmall { required: usize, found: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("generator failure: {0}")]
    GeneratorFailure(String),
}

pub type Result<T> = std::result::Result<T, NordenError>;
