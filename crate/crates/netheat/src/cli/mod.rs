//! The `netheat` command line: config parsing, the expression grammar for
//! radial initial data, and the experiment drivers.

pub mod config;
pub mod expr;
mod experiments;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, GraphSource, InitialData};
pub use experiments::{run, validate, RunOutcome, ValidateOutcome};
