//! Datasets as the training engine and evaluator see them: raw synthetic
//! samples that go through the encoders, or precomputed feature pairs.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::encoders::{
    downsample_video, make_prompt, perturb_landmarks, roi_trace, FeatureRecord, Label, LEncoder, PEncoder,
    Quality, Sample, TEncoder,
};
use crate::error::{Error, Result};
use crate::rng;

use super::model::z_fps_for_duration;
use super::{LInput, PInput, TrainConfig, TrainItem, View};

/// HQ and LQ feature views of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub id: String,
    pub label: Label,
    pub hq: View,
    pub lq: View,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Raw(Vec<Sample>),
    Features(Vec<FeaturePair>),
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

impl Dataset {
    /// Pairs HQ and LQ records by id, in first-appearance order.
    pub fn from_records(records: &[FeatureRecord], z_fps: f64) -> Result<Self> {
        let mut order: Vec<&str> = Vec::new();
        let mut slots: BTreeMap<&str, [Option<&FeatureRecord>; 2]> = BTreeMap::new();
        for r in records {
            let entry = slots.entry(r.id.as_str()).or_insert_with(|| {
                order.push(r.id.as_str());
                [None, None]
            });
            let q = matches!(r.quality, Quality::LQ) as usize;
            if entry[q].replace(r).is_some() {
                return Err(Error::Format(format!("duplicate {:?} record for {:?}", r.quality, r.id)));
            }
        }
        let view = |r: &FeatureRecord| View {
            p: Some(PInput::Feature(to_f64(&r.z))),
            l: Some(LInput::Feature(to_f64(&r.e))),
            t: Some(to_f64(&r.t)),
            z_fps,
        };
        let mut pairs = Vec::with_capacity(order.len());
        for id in order {
            let [hq, lq] = slots[id];
            let (Some(hq), Some(lq)) = (hq, lq) else {
                return Err(Error::Format(format!("record {id:?} lacks an HQ or LQ view")));
            };
            if hq.label != lq.label {
                return Err(Error::Format(format!("record {id:?} has conflicting labels")));
            }
            pairs.push(FeaturePair {
                id: id.to_string(),
                label: hq.label,
                hq: view(hq),
                lq: view(lq),
            });
        }
        Ok(Dataset::Features(pairs))
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Raw(s) => s.len(),
            Dataset::Features(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<Label> {
        match self {
            Dataset::Raw(s) => s.iter().map(|s| s.label).collect(),
            Dataset::Features(p) => p.iter().map(|p| p.label).collect(),
        }
    }

    pub fn id(&self, i: usize) -> &str {
        match self {
            Dataset::Raw(s) => &s[i].id,
            Dataset::Features(p) => &p[i].id,
        }
    }

    /// HQ/LQ views of sample `i` for `epoch`. Raw samples draw a fresh
    /// training prompt (shared by both views) and fresh landmark noise per
    /// epoch.
    pub fn train_item(&self, i: usize, cfg: &TrainConfig, epoch: u64) -> Result<TrainItem> {
        match self {
            Dataset::Features(p) => Ok(TrainItem {
                hq: p[i].hq.clone(),
                lq: p[i].lq.clone(),
                label: p[i].label,
            }),
            Dataset::Raw(samples) => {
                let s = &samples[i];
                let prompt_seed = rng::derive_seed(cfg.seed, &[rng::tag("train_prompt"), epoch, s.seed]);
                let prompt = make_prompt(s.label, prompt_seed, None);
                let text = TEncoder::shared().embed(&prompt.text);
                let noise_seed = rng::derive_seed(cfg.seed, &[rng::tag("train_lq"), epoch, s.seed]);
                let z_fps = z_fps_for_duration(s.clip.duration_s());
                let lq_clip = downsample_video(&s.clip, cfg.lq_factor)?;
                Ok(TrainItem {
                    hq: View {
                        p: Some(PInput::Trace(roi_trace(&s.clip))),
                        l: Some(LInput::Landmarks(s.landmarks.clone())),
                        t: Some(text.clone()),
                        z_fps,
                    },
                    lq: View {
                        p: Some(PInput::Trace(roi_trace(&lq_clip))),
                        l: Some(LInput::Landmarks(perturb_landmarks(&s.landmarks, cfg.lq_sigma, noise_seed)?)),
                        t: Some(text),
                        z_fps,
                    },
                    label: s.label,
                })
            }
        }
    }

    pub fn items(&self, indices: &[usize], cfg: &TrainConfig, epoch: u64) -> Result<Vec<TrainItem>> {
        indices.par_iter().map(|&i| self.train_item(i, cfg, epoch)).collect()
    }
}

/// Fixed, seeded toy encoders used to turn raw samples into feature records.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub p_enc: PEncoder,
    pub l_enc: LEncoder,
    pub lq_factor: usize,
    pub lq_sigma: f64,
}

impl FeatureExtractor {
    pub fn new(cfg: &TrainConfig, seed: u64) -> Self {
        let r = |what: &str| rng::stream(seed, &[rng::tag("extractor"), rng::tag(what)]);
        Self {
            p_enc: PEncoder::new(cfg.p_channels, cfg.p_kernel, cfg.p_gain, &mut r("p_enc")),
            l_enc: LEncoder::new(cfg.landmarks, cfg.l_hidden, &mut r("l_enc")),
            lq_factor: cfg.lq_factor,
            lq_sigma: cfg.lq_sigma,
        }
    }

    /// One HQ and one LQ record per sample, using each sample's stored prompt.
    pub fn extract(&self, samples: &[Sample]) -> Result<Vec<FeatureRecord>> {
        let per: Vec<[FeatureRecord; 2]> = samples
            .par_iter()
            .map(|s| {
                let t: Vec<f32> = TEncoder::shared().embed(&s.prompt.text).iter().map(|&v| v as f32).collect();
                let lq_clip = downsample_video(&s.clip, self.lq_factor)?;
                let lq_marks = perturb_landmarks(&s.landmarks, self.lq_sigma, rng::derive_seed(s.seed, &[rng::tag("extract_lq")]))?;
                let f32s = |v: Vec<f64>| -> Vec<f32> { v.into_iter().map(|x| x as f32).collect() };
                let rec = |quality, z: Vec<f64>, e: Vec<f64>| FeatureRecord {
                    id: s.id.clone(),
                    label: s.label,
                    quality,
                    z: f32s(z),
                    e: f32s(e),
                    t: t.clone(),
                };
                Ok([
                    rec(
                        Quality::HQ,
                        self.p_enc.forward(&roi_trace(&s.clip))?.0,
                        self.l_enc.forward(&s.landmarks)?.0,
                    ),
                    rec(
                        Quality::LQ,
                        self.p_enc.forward(&roi_trace(&lq_clip))?.0,
                        self.l_enc.forward(&lq_marks)?.0,
                    ),
                ])
            })
            .collect::<Result<_>>()?;
        Ok(per.into_iter().flatten().collect())
    }
}
