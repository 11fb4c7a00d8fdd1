//! Command-line driver: configuration loading, scenario runs, experiment
//! replays and report output.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::run_cli;
pub use config::RunConfig;
pub use error::CliError;
