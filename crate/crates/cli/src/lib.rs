//! Experiment runner for the aggregation-diffusion solver: config parsing,
//! preset execution, CSV/summary/plot artifacts, sweeps and the property
//! suite.

pub mod check;
pub mod config;
mod error;
pub mod experiment;
pub mod sweep;

pub use check::{check_command, run_checks, CheckOutcome};
pub use config::{
    normalize, parse_config, parse_config_in, serialize, ExperimentConfig, ParseError, Preset,
    RawConfig,
};
pub use error::{exit, CliError};
pub use experiment::{csv_header, run_experiment, Experiment, OracleCheck, Summary, FAILED_MARKER};
pub use sweep::{run_sweep, SweepRun, SweepSpec};
