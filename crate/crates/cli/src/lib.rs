//! Library side of the `pdirac` command-line tool.

pub mod commands;
pub mod config;

pub use commands::{parse_lambda, run, Command, Report, RunError};
pub use config::{ConfigError, RunConfig};
