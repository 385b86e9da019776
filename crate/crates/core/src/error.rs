//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A family was evaluated outside the range where its probability
    /// masses are valid and stochastically monotone. Carries the largest
    /// admissible density found by bisection.
    #[error("alpha {alpha} outside validated range (max valid alpha is {max_alpha})")]
    AlphaOutOfRange { alpha: f64, max_alpha: f64 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
