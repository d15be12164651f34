//! Command-line harness: configuration, run orchestration and output files.

pub mod config;
pub mod io;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use run::{run, Command, Outcome, RunError};
