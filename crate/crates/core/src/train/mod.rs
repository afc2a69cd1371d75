pub mod data;
pub mod fit;
pub mod loss;
pub mod tune;

pub use data::{blob_image, synthetic_blobs, BlobSpec, LabeledImages};
pub use fit::{
    argmax_rows, default_validation, epoch_batches, evaluate, fit, fit_with, train_epoch, CheckpointRecord, EpochRecord,
    EpochStats, FitFailure, FitOptions, FitResult, TaskMode, TrainConfig, Validation,
};
pub use loss::{cce_loss, cross_entropy, LossOutput, COMPLEMENT_EPS};
pub use tune::{expected_improvement, gp_tune, latin_hypercube, quadratic_objective, Gp, Trial, TrialSource, TuneResult, TuneSpace};
