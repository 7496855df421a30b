//! Command-line front end for the `erpm` library: TOML model configuration,
//! CSV data loading and JSON/CSV result files.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use commands::{run, Cli, Command};
pub use error::{CliError, Result};
