//! Simulation and analysis of Harris flows: coalescing systems of Brownian
//! particles on the line whose pairwise covariation is `φ(x − y)`.
//!
//! - [`covariance`] holds the covariation functions and the integral tests
//!   that classify them.
//! - [`gaussian`] provides the counter-based random streams and the
//!   positive-semidefinite factorisations used to draw correlated increments.
//! - [`flow`] simulates flows, tangent processes and their coupling.
//! - [`analysis`] computes sup-deviation statistics and checks the Gaussian
//!   comparison and concentration inequalities by Monte Carlo.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod covariance;
pub mod error;
pub mod flow;
pub mod gaussian;
pub mod quadrature;
pub mod runner;

pub use covariance::CovarianceModel;
pub use error::{Error, Result};
pub use flow::SimConfig;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/covariance.md")]
    mod covariance {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/deviations.md")]
    mod deviations {}
    #[doc = include_str!("../../../book/src/comparison.md")]
    mod comparison {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
