//! Batch runner for `hjbpi-core`: TOML experiment configs, CSV exports and
//! `key: value` summaries, with fixed exit codes (0 ok, 2 invalid input,
//! 3 numerical blowup, 4 violated invariant).

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{load_config, parse_config, serialize_config, ExperimentConfig, Mode};
pub use experiment::{run_experiment, RunError};
pub use output::Summary;
