//! Experiment runner for the heralded parity-projection simulator.
//!
//! The `herald` binary is a thin shell over these modules: [`config`] parses
//! sweep files, [`sweep`] evaluates grids into CSV, [`validate`] checks the
//! simulation against closed forms and [`report`] prints single points.

pub mod config;
pub mod error;
pub mod report;
pub mod sweep;
pub mod validate;

pub use error::{CliError, Result};
