//! Training: configuration, batching, the differentiable model, AdamW and
//! checkpoints.

mod checkpoint;
mod config;
mod data;
mod engine;
pub mod gradcheck;
mod model;
mod optim;
mod schedule;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointRecord, CKPT_MAGIC, CKPT_VERSION};
pub use config::{AblationModel, InputMode, MissingPolicy, Schedule, TrainConfig};
pub use data::{Dataset, FeatureExtractor, FeaturePair};
pub use engine::{fit, fit_with, steps_per_epoch, train_step, zero_gradient_arrays, TrainState};
pub use gradcheck::{grad_check, model_grad_check, rel_err, term_suite, GradCheckOptions, GradCheckReport};
pub use model::{batch_objective, z_fps_for_duration, LInput, Model, PInput, TermWeights, TrainItem, View, ViewPass};
pub use optim::AdamW;
pub use schedule::{balanced_batches, lr_at};
