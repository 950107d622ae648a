//! Experiment driver: sectioned configs, subcommand dispatch and CSV/report
//! output for the `landau-core` numerics.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run_subcommand, snapshot_norms, SUBCOMMANDS};
pub use config::{ConfigError, ExperimentConfig};
pub use report::RunReport;
