//! Experiment runner behind the `auxlearn` binary: configuration, data
//! preparation and the `curate`, `synth-data`, `train`, `evaluate` and
//! `reproduce` commands.

pub mod commands;
pub mod config;

pub use config::{
    DataSource, ExperimentConfig, ExperimentKind, LossKind, Overrides, SyntheticParams,
};

/// Process exit status for a failed command: 2 for bad input or
/// configuration, 1 for everything else.
pub fn exit_code(err: &auxlearn::Error) -> u8 {
    if err.is_input_error() {
        2
    } else {
        1
    }
}
