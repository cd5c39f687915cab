use thiserror::Error;

/// Errors raised by problem construction, solves and bound evaluation.
#[derive(Debug, Error)]
pub enum OneShotError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral radius {rho} >= 1: {hint}")]
    NotContractive { rho: f64, hint: String },

    #[error("problem generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error("malformed problem file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OneShotError>;
