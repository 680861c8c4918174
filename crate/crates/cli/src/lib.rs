//! Experiment harness around `agtv-core`: phantoms, projection, single
//! reconstructions, parameter sweeps and method comparisons driven by flat
//! `key = value` config files.

pub mod commands;
pub mod config;
pub mod error;
mod output;

pub use error::{CliError, Result};
