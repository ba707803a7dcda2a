use thiserror::Error;

pub type Result<T, E = PmtoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PmtoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cholesky factorization failed even with jitter {jitter:e}")]
    NumericalFailure { jitter: f64 },

    #[error("negative posterior variance {0:e}")]
    NegativeVariance(f64),

    #[error("non-finite objective value: {0}")]
    NonFinite(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(PmtoError::DimensionMismatch { expected, got });
    }
    Ok(())
}
