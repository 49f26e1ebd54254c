//! Error types shared across the library.

use thiserror::Error;

/// Errors raised by the basic numeric building blocks (vectors, sets, RNG).
#[derive(Debug, Error)]
pub enum CoreError {
    /// Two operands had incompatible dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A vector entry or scalar parameter was NaN or infinite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// A parameter was outside its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An operation that needs at least one element received none.
    #[error("empty input in {context}")]
    Empty { context: &'static str },
}

impl CoreError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
