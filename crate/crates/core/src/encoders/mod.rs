//! Toy stand-in encoders for the three derived modalities, the degradation
//! operators that produce low-quality views, the prompt bank, and the
//! synthetic dataset generator.

mod featfile;
mod landmarks;
mod p_encoder;
mod prompts;
mod synth;
mod t_encoder;
mod l_encoder;
mod video;

use serde::{Deserialize, Serialize};

pub use featfile::{
    read_features, read_features_from, write_features, write_features_to, FeatureRecord, FEAT_MAGIC,
    FEAT_VERSION,
};
pub use l_encoder::{LEncoder, LEncoderCache, Rnn};
pub use landmarks::{perturb_landmarks, LandmarkSequence};
pub use p_encoder::{PEncoder, PEncoderCache};
pub use prompts::{make_prompt, PromptKind, PromptText, Validity, FAKE_PROMPTS, REAL_PROMPTS};
pub use synth::{pulse_prominence, synth_dataset, synth_splits, Sample, SynthSpec};
pub use t_encoder::TEncoder;
pub use video::{downsample_video, frame_indices, roi_trace, sample_frames, VideoClip};

/// Output widths of the three encoders.
pub const Z_DIM: usize = 320;
pub const E_DIM: usize = 128;
pub const T_DIM: usize = 512;

/// Class label. Index 1 is real, 0 is fake, everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Fake = 0,
    Real = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_f64(self) -> f64 {
        self as usize as f64
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Label::Fake),
            1 => Some(Label::Real),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Fake => Label::Real,
            Label::Real => Label::Fake,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quality {
    HQ,
    LQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    /// rPPG.
    P,
    /// Facial landmarks.
    L,
    /// Text prompt.
    T,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::P, Modality::L, Modality::T];

    pub fn feature_dim(self) -> usize {
        match self {
            Modality::P => Z_DIM,
            Modality::L => E_DIM,
            Modality::T => T_DIM,
        }
    }

    pub fn short(self) -> char {
        match self {
            Modality::P => 'P',
            Modality::L => 'L',
            Modality::T => 'T',
        }
    }
}

/// Encoder output tagged with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityFeature {
    pub vector: Vec<f64>,
    pub modality: Modality,
    pub quality: Quality,
    pub label: Label,
}
