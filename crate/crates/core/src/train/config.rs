use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoders::Modality;
use crate::error::{Error, Result};
use crate::kv;
use crate::signal::SpectralConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Constant during warm-up, then cosine decay to `lr_final`.
    Cosine,
    /// `lr_init` during warm-up, `lr_final` afterwards.
    TwoPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Clips, landmarks and prompts go through the trainable toy encoders.
    Raw,
    /// Precomputed `z, e, t` features; encoders are bypassed.
    Features,
}

/// What inference does when a modality input is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Feed a zero feature vector, so the modality contributes its projection bias.
    Zero,
    Error,
}

mod modality_set {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Modality], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.iter().map(|m| m.short()).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Modality>, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub fn parse(s: &str) -> std::result::Result<Vec<Modality>, String> {
        let mut out = Vec::new();
        for ch in s.chars() {
            let m = match ch.to_ascii_uppercase() {
                'P' => Modality::P,
                'L' => Modality::L,
                'T' => Modality::T,
                other => return Err(format!("unknown modality {other:?}")),
            };
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out.sort();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lr_init: f64,
    pub lr_final: f64,
    pub warmup_fraction: f64,
    pub schedule: Schedule,
    pub alpha: f64,
    pub beta: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub use_asa: bool,
    pub use_cqsl: bool,
    #[serde(with = "modality_set")]
    pub modalities: Vec<Modality>,
    pub head_bias: bool,
    pub input: InputMode,
    pub missing_modality: MissingPolicy,
    pub landmarks: usize,
    pub p_channels: usize,
    pub p_kernel: usize,
    pub p_gain: f64,
    pub l_hidden: usize,
    /// Downsample factor and landmark noise of the training LQ view.
    pub lq_factor: usize,
    pub lq_sigma: f64,
    /// Sampling rate assigned to `z` when no clip duration is known.
    pub feature_fps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            epochs: 30,
            seed: 0,
            lr_init: 1e-3,
            lr_final: 5e-5,
            warmup_fraction: 0.1,
            schedule: Schedule::Cosine,
            alpha: 0.25,
            beta: 0.25,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.01,
            use_asa: true,
            use_cqsl: true,
            modalities: Modality::ALL.to_vec(),
            head_bias: true,
            input: InputMode::Raw,
            missing_modality: MissingPolicy::Zero,
            landmarks: 8,
            p_channels: 4,
            p_kernel: 5,
            p_gain: 100.0,
            l_hidden: 16,
            lq_factor: 4,
            lq_sigma: 0.01,
            // 320 feature samples over a 100-frame, 30 fps clip.
            feature_fps: 319.0 * 30.0 / 99.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.batch_size < 2 || self.batch_size % 2 != 0 {
            return bad(format!("batch_size must be even and >= 2, got {}", self.batch_size));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return bad(format!("warmup_fraction must lie in (0, 1), got {}", self.warmup_fraction));
        }
        if !(self.lr_init > 0.0 && self.lr_final > 0.0 && self.lr_init.is_finite() && self.lr_final.is_finite()) {
            return bad("learning rates must be positive".into());
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("weight_decay", self.weight_decay)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive".into());
        }
        if self.modalities.is_empty() {
            return bad("at least one modality is required".into());
        }
        if self.landmarks < 4 {
            return bad(format!("landmarks must be >= 4, got {}", self.landmarks));
        }
        if self.p_channels == 0 || self.p_kernel % 2 == 0 || self.l_hidden == 0 {
            return bad("p_channels and l_hidden must be positive, p_kernel odd".into());
        }
        if self.lq_factor == 0 || !(self.lq_sigma >= 0.0) || !(self.p_gain > 0.0) {
            return bad("lq_factor must be >= 1, lq_sigma >= 0, p_gain > 0".into());
        }
        SpectralConfig::with_fps(self.feature_fps)
            .map_err(|e| Error::InvalidConfig(format!("feature_fps: {e}")))?;
        Ok(())
    }

    pub fn has(&self, m: Modality) -> bool {
        self.modalities.contains(&m)
    }

    /// CQSL acts on the rPPG feature, so it needs P.
    pub fn cqsl_active(&self) -> bool {
        self.use_cqsl && self.has(Modality::P)
    }

    /// ASA needs at least two modalities to form cross-modality pairs.
    pub fn asa_active(&self) -> bool {
        self.use_asa && self.modalities.len() >= 2
    }

    /// Canonical text: sorted `key=value` lines.
    pub fn to_text(&self) -> String {
        kv::to_text(self)
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        kv::to_pairs(self)
    }

    /// Defaults overridden by `pairs`; unknown keys are rejected.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let cfg: Self = kv::from_pairs(&Self::default(), pairs, Error::InvalidConfig)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(kv::parse_lines(text, Error::InvalidConfig)?)
    }

    pub fn is_config_key(key: &str) -> bool {
        Self::default().to_pairs().iter().any(|(k, _)| k == key)
    }

    pub fn with_ablation(mut self, model: AblationModel) -> Self {
        model.apply(&mut self);
        self
    }
}

/// The four flag sets of the modality ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AblationModel {
    /// Landmarks only.
    A,
    /// rPPG only, with CQSL.
    B,
    /// All three modalities concatenated, with CQSL.
    C,
    /// All three modalities with ASA and CQSL.
    D,
}

impl AblationModel {
    pub const ALL: [AblationModel; 4] = [AblationModel::A, AblationModel::B, AblationModel::C, AblationModel::D];

    pub fn apply(self, cfg: &mut TrainConfig) {
        let (mods, asa, cqsl): (&[Modality], bool, bool) = match self {
            AblationModel::A => (&[Modality::L], false, false),
            AblationModel::B => (&[Modality::P], false, true),
            AblationModel::C => (&Modality::ALL, false, true),
            AblationModel::D => (&Modality::ALL, true, true),
        };
        cfg.modalities = mods.to_vec();
        cfg.use_asa = asa;
        cfg.use_cqsl = cqsl;
    }
}

impl fmt::Display for AblationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for AblationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(AblationModel::A),
            "B" => Ok(AblationModel::B),
            "C" => Ok(AblationModel::C),
            "D" => Ok(AblationModel::D),
            _ => Err(Error::InvalidConfig(format!("unknown ablation model {s:?}"))),
        }
    }
}
