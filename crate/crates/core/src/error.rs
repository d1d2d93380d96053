use thiserror::Error;

/// Errors raised by the gradient-enhanced GP library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("factorization failed at pivot {pivot} with nugget {eta:e}")]
    Factorization { pivot: usize, eta: f64 },

    #[error("no feasible starting point for the constrained hyperparameter fit")]
    NoFeasibleStart,

    #[error("dataset parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
