//! Multi-modal deepfake detection with physiological, landmark and text cues.

pub mod alignment;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod head;
pub mod kv;
pub mod rng;
pub mod signal;
pub mod tensor;
pub mod train;

pub use encoders::{Label, Modality, Quality, Sample, SynthSpec};
pub use error::{Error, Result};
pub use train::{fit, Dataset, TrainConfig, TrainState};
