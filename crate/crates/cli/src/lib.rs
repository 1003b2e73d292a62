//! Configuration, commands and record output for the `squid-qed` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

pub use commands::{cmd_run, cmd_sweep, cmd_validate};
pub use config::{parse_config, Document, OutputFormat, RunConfig};
pub use error::{CliError, ConfigError};
pub use record::RunRecord;
