//! Command-line driver for the coupled frequency-doubler analysis: run
//! configuration, figure presets, parallel ensembles and table output.

pub mod cli;
pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod output;
pub mod presets;

pub use config::RunConfig;
pub use error::{CliError, Result};
