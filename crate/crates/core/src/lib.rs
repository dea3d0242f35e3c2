//! Consumption and savings under unstable work schedules.
//!
//! Agents solve a stochastic value table once, then at every week solve a
//! deterministic DP over the part of their schedule they can see, closed off
//! by that table. The crate also ships executable checks of the lookahead
//! gap bounds, the experiment world (cohorts, shocks, return regimes,
//! interventions) and the experiment recipes behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
pub mod error;
pub mod model;
pub mod policy;
pub mod report;
pub mod scenario;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
