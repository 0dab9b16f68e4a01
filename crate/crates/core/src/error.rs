use alloc::string::String;

use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A NaN or infinite value was found in the input.
    #[error("non-finite value in {what} at index ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("dimension mismatch for {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// More factors were requested than the panel can support.
    #[error("requested {requested} factors but X'X has numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    /// Regressor `column` (0-based, intercept excluded) is a linear
    /// combination of the intercept and the columns before it.
    #[error("regressor column {column} is collinear with the intercept or earlier columns")]
    Collinear { column: usize },

    #[error("zero variation in {0}")]
    ZeroVariance(&'static str),

    /// An internal invariant was violated.
    #[error("internal invariant violated: {0}")]
    Invariant(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
