//! Point motion of Harris flows, the tangent process, and their coupling.
//!
//! Every simulator advances in Euler steps of length `dt` and records
//! positions at 64 equally spaced output times plus any requested
//! checkpoints. Randomness for step `k` of replica `r` comes from
//! `RngStream::at(seed, r, k)`, so a replica is a pure function of its
//! configuration.

mod config;
mod record;
mod sim;
mod state;

pub use config::{make_grid, GridRule, SimConfig, DEFAULT_STEPS, OUTPUT_TIMES};
pub use record::{CoupledPathRecord, FlowPathRecord};
pub use sim::{
    qv_gap, simulate, simulate_arratia, simulate_coupled, simulate_harris, simulate_tangent, tangent_terminal,
};
pub use state::{Cluster, FlowState};
