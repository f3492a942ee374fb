use thiserror::Error;

/// Errors raised by the criterion engine and its supporting data models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),

    #[error("strategy count {count} exceeds enumeration cap {cap}")]
    CapExceeded { count: f64, cap: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
