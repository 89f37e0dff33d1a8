//! Experiment runner for semi-Markov modulated perpetuities: TOML
//! configuration, deterministic parallel replication, and CSV/JSON output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod runner;

pub use config::{parse_config, validate, ExperimentConfig, ExperimentKind, Overrides, Validated};
pub use error::CliError;
pub use experiments::run;
pub use output::{emit, ResultRecord, Verdict};
