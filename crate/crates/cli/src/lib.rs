//! Command-line harness for expert-advice games: JSON game configs, trace
//! CSV and summary JSON output, mixability checks and η estimation.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run_config, run_file, run_files, RunReport};
pub use config::GameConfig;
pub use error::{exit, CliError};
