//! Experiment harness for `landing-core`: TOML manifests, parallel runners,
//! CSV traces and summaries, and the `landing` command-line tool.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiments;
pub mod summary;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::CliError;
pub use experiments::{run_experiment, run_experiment_on, Report};
