use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("iterate became non-finite at k = {k}")]
    Divergence { k: usize },

    #[error("schedule invalid: {0}")]
    Schedule(String),

    #[error("sequence is not nonincreasing at index {index}")]
    NotMonotone { index: usize },

    #[error("reference point required: {0}")]
    MissingReference(&'static str),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(expected: impl std::fmt::Debug, actual: impl std::fmt::Debug) -> Self {
        Error::DimensionMismatch {
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }
}
