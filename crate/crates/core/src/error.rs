use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("covariation function is not monotone non-increasing on [0, {upper}] (violation near x = {at})")]
    NonMonotone { upper: f64, at: f64 },

    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64 },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("factorization of a {dim}x{dim} matrix failed: {detail}")]
    FactorizationFailure { dim: usize, detail: String },

    #[error("time {0} is not among the recorded times")]
    TimeNotRecorded(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid correlation: {0}")]
    InvalidCorrelation(String),

    #[error("test function {0} has no second derivatives; use the smoothed variant")]
    NotSmooth(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
