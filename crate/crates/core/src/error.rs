use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("ill-conditioned known-support submatrix (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("only {available} finite-preference blocks available, {requested} requested")]
    InsufficientBlocks { available: usize, requested: usize },

    #[error("zero spectrum value at coefficient index {0}")]
    ZeroSpectrum(i64),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
