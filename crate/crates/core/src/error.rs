use thiserror::Error;

/// Errors raised by distributions, oracles and the algorithms built on them.
#[derive(Debug, Error)]
pub enum JuntaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {n} exceeds the exact-operation cap {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("subcube has zero probability mass")]
    ZeroMass,

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample source exhausted: needed {needed}, had {available}")]
    SourceExhausted { needed: usize, available: usize },

    #[error("malformed instance: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, JuntaError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(JuntaError::InvalidParameter(msg.into()))
}
