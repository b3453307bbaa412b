//! Experiment configs, dataset checks and result records for the `mothcore` CLI.

pub mod config;
pub mod data;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use output::RunRecord;
