use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{
    downsample_video, frame_indices, make_prompt, perturb_landmarks, roi_trace, sample_frames, Label, PromptKind,
    Sample, TEncoder,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::train::{z_fps_for_duration, Dataset, LInput, Model, PInput, TrainConfig, View};

use super::{acc, auc, ConditionMetrics, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degradation {
    /// Spatial block-average pooling of the clip.
    VideoDownsample(usize),
    /// Gaussian landmark jitter.
    LandmarkSigma(f64),
    /// Uniform frame subsampling of clip and landmarks.
    FrameRatio(f64),
    /// Forced evaluation prompt.
    PromptKind(PromptKind),
}

impl fmt::Display for Degradation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degradation::VideoDownsample(k) => write!(f, "downsample{k}"),
            Degradation::LandmarkSigma(s) => write!(f, "sigma{s}"),
            Degradation::FrameRatio(r) => write!(f, "ratio{r}"),
            Degradation::PromptKind(k) => write!(f, "prompt_{}", k.name()),
        }
    }
}

/// A named list of degradations, applied in order. The empty list is the
/// clean condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCondition {
    pub name: String,
    pub degradations: Vec<Degradation>,
}

impl EvalCondition {
    pub fn clean() -> Self {
        Self::new("clean", vec![])
    }

    pub fn new(name: &str, degradations: Vec<Degradation>) -> Self {
        Self {
            name: name.to_string(),
            degradations,
        }
    }
}

/// The eleven robustness rows: clean, four frame ratios, two landmark
/// sigmas and four prompt kinds.
pub fn robustness_conditions() -> Vec<EvalCondition> {
    let mut out = vec![EvalCondition::clean()];
    for r in [0.9, 0.7, 0.5, 0.3] {
        out.push(EvalCondition::new(&format!("ratio_{r}"), vec![Degradation::FrameRatio(r)]));
    }
    for s in [0.01, 0.05] {
        out.push(EvalCondition::new(&format!("sigma_{s}"), vec![Degradation::LandmarkSigma(s)]));
    }
    for k in PromptKind::ALL {
        out.push(EvalCondition::new(&format!("prompt_{}", k.name()), vec![Degradation::PromptKind(k)]));
    }
    out
}

/// Compression ladder: raw, c23 and c40 emulated by downsampling and
/// landmark jitter.
pub fn ladder_conditions() -> Vec<EvalCondition> {
    [("raw", 1, 0.0), ("c23", 2, 0.005), ("c40", 4, 0.01)]
        .into_iter()
        .map(|(name, k, s)| {
            EvalCondition::new(name, vec![Degradation::VideoDownsample(k), Degradation::LandmarkSigma(s)])
        })
        .collect()
}

/// Frame-ratio ladder 1.0, 0.9, 0.7, 0.5, 0.3.
pub fn ratio_conditions() -> Vec<EvalCondition> {
    [1.0, 0.9, 0.7, 0.5, 0.3]
        .into_iter()
        .map(|r| EvalCondition::new(&format!("ratio_{r}"), vec![Degradation::FrameRatio(r)]))
        .collect()
}

/// Evaluation view of one raw sample under `cond`. Without a prompt
/// degradation the sample gets a valid description prompt.
pub fn degraded_view(s: &Sample, cond: &EvalCondition) -> Result<View> {
    let mut clip = s.clip.clone();
    let mut marks = s.landmarks.clone();
    let mut kind = PromptKind::Description;
    for (k, d) in cond.degradations.iter().enumerate() {
        match *d {
            Degradation::VideoDownsample(f) => clip = downsample_video(&clip, f)?,
            Degradation::LandmarkSigma(sigma) => {
                let seed = rng::derive_seed(s.seed, &[rng::tag("eval_landmarks"), k as u64]);
                marks = perturb_landmarks(&marks, sigma, seed)?;
            }
            Degradation::FrameRatio(r) => {
                let idx = frame_indices(clip.t, r)?;
                clip = sample_frames(&clip, r)?;
                marks = marks.select(&idx);
            }
            Degradation::PromptKind(p) => kind = p,
        }
    }
    let prompt = make_prompt(s.label, rng::derive_seed(s.seed, &[rng::tag("eval_prompt")]), Some(kind));
    Ok(View {
        p: Some(PInput::Trace(roi_trace(&clip))),
        l: Some(LInput::Landmarks(marks)),
        t: Some(TEncoder::shared().embed(&prompt.text)),
        z_fps: z_fps_for_duration(clip.duration_s()),
    })
}

/// Real-class probabilities for every sample under `cond`, in dataset order.
pub fn scores(model: &Model, cfg: &TrainConfig, data: &Dataset, cond: &EvalCondition) -> Result<Vec<f64>> {
    match data {
        Dataset::Raw(samples) => samples
            .par_iter()
            .map(|s| Ok(model.predict(&degraded_view(s, cond)?, cfg.missing_modality)?.p_real()))
            .collect(),
        Dataset::Features(pairs) => {
            if !cond.degradations.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "condition {:?} degrades raw inputs; precomputed features support only the clean condition",
                    cond.name
                )));
            }
            pairs
                .par_iter()
                .map(|p| Ok(model.predict(&p.hq, cfg.missing_modality)?.p_real()))
                .collect()
        }
    }
}

pub fn evaluate(model: &Model, cfg: &TrainConfig, data: &Dataset, cond: &EvalCondition) -> Result<ConditionMetrics> {
    let s = scores(model, cfg, data, cond)?;
    let labels: Vec<Label> = data.labels();
    Ok(ConditionMetrics {
        name: cond.name.clone(),
        auc: auc(&s, &labels)?,
        acc: acc(&s, &labels, DEFAULT_THRESHOLD)?,
        n_samples: s.len(),
    })
}

pub fn evaluate_all(
    model: &Model,
    cfg: &TrainConfig,
    data: &Dataset,
    conds: &[EvalCondition],
) -> Result<Vec<ConditionMetrics>> {
    conds.iter().map(|c| evaluate(model, cfg, data, c)).collect()
}
