//! Batch runner for Harris flow experiments.
//!
//! An experiment is described by a spec file (see [`spec`]), executed by
//! [`run::run`] and summarised in `report.json` next to its CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod report;
pub mod run;
pub mod spec;
pub mod svg;

pub use error::{CliError, CliResult};
pub use spec::{ExperimentSpec, Kind};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const ERROR: i32 = 2;
}
