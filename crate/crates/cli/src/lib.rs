//! Config-driven experiments on top of `ratchet-core`: stationary and
//! transient runs, sweeps, Monte Carlo checks and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run_experiment, run_sweep_command, RunOutcome};
pub use config::{ExperimentConfig, LoadedConfig, Overrides};
pub use error::CliError;
