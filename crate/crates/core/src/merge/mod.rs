//! Tensor container I/O, linear checkpoint interpolation and weight sweeps.

mod container;
mod dtype;
mod interp;
mod sweep;

pub use container::{load_checkpoint, save_checkpoint, Checkpoint, TensorRecord};
pub use dtype::Dtype;
pub use interp::{f32_weights, merge_linear, MergeReport, META_BETA, META_GLOBAL, META_REGIONAL};
pub use sweep::{
    merged_file_name, sweep_beta, validate_grid, CommandEvaluator, Evaluation, Evaluator,
    LookupEvaluator, SweepOutcome, SweepRow, SweepSources,
};

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("unsupported dtype {0:?}")]
    UnsupportedDtype(String),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error(
        "incompatible checkpoints: only in global {only_global:?}, only in regional {only_regional:?}, mismatched {mismatched:?}"
    )]
    IncompatibleCheckpoints {
        only_global: Vec<String>,
        only_regional: Vec<String>,
        mismatched: Vec<String>,
    },
    #[error("beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("invalid beta grid: {0}")]
    InvalidGrid(String),
    #[error("evaluator failed at beta = {beta}: {message}")]
    Evaluator { beta: f64, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}
