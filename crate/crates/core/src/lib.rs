//! Training-based multiuser scheduling on the block-fading multiple-access
//! channel.
//!
//! Each coherence block of `L` symbols starts with `K` single-symbol pilots,
//! one per candidate user. The base station forms MMSE channel estimates and
//! lets the user with the strongest estimate transmit for the rest of the
//! block. This crate evaluates the resulting achievable-rate lower bound,
//! optimizes pilot time, pilot power and user count, compares the optimum
//! with its large-`L` expansions, and checks everything against a seeded
//! Monte Carlo simulator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod rate;
pub mod sim;

pub use error::{Error, Result};
pub use model::{EstimationStats, SystemConfig, TrainingPolicy};
pub use rate::{RateMethod, RateResult};
