//! Battery sizing for PV systems: time-series simulation of a PV plant,
//! genset and battery under a dispatch strategy, economic indicators, and
//! sweeps over battery size.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod cli;
pub mod components;
pub mod config;
pub mod dispatch;
pub mod economics;
pub mod engine;
pub mod error;
pub mod report;
pub mod sizing;
pub mod timeseries;

pub use error::{Error, Result};
