//! Command implementations behind the `drgrade` binary.

pub mod cli;
pub mod commands;
pub mod config;

pub use commands::{
    checkpoint_path, cmd_evaluate, cmd_predict, cmd_prepare, cmd_report, cmd_synth, cmd_train, cmd_tune, evaluate_predictions,
    history_path, load_prepared, prepared_manifest_path, Evaluation, Prediction, RunArtifacts, TrainSummary,
};
pub use config::{AugmentationConfig, DataConfig, EvalConfig, PipelineConfig, TuneConfig};
