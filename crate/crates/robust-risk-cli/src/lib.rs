//! Batch front end for the `robust-risk` library: config parsing, dry-run
//! validation and the pipelines behind each subcommand.

pub mod config;
mod params;
pub mod run;

pub use config::{parse_config, parse_override, ConfigError};
pub use run::{run, validate, Command, Diagnostic, Manifest, RunConfig, RunError, RunOutput, Severity};
