use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("hypothesis family `{0}` requires an embedded domain")]
    MissingEmbedding(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("distribution is not {sigma}-smooth (max weight {max_weight}, cap {cap})")]
    NotSmooth { sigma: f64, max_weight: f64, cap: f64 },

    #[error("enumeration of {count} candidates exceeds the limit {limit}; use a smaller M or k")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
