use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv;
use crate::rng;
use crate::signal::{power_spectral_density, SpectralConfig};

use super::{make_prompt, Label, LandmarkSequence, PromptText, Quality, VideoClip};

/// Generator knobs. Defaults give a task where every modality carries some
/// signal at HQ and each degrades differently at LQ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub fps: f64,
    pub landmarks: usize,
    /// Pulse frequency range for both classes, Hz.
    pub hr_low_hz: f64,
    pub hr_high_hz: f64,
    /// Relative skin-brightness modulation of real pulses.
    pub pulse_amp: f64,
    /// Fake pulse amplitude as a fraction of the real one.
    pub fake_pulse_scale: f64,
    /// Fake pulse phase is redrawn every `fake_segment_min..=fake_segment_max` frames.
    pub fake_segment_min: usize,
    pub fake_segment_max: usize,
    pub pixel_noise: f64,
    /// Std of the independent per-frame background brightness flicker.
    pub bg_flicker: f64,
    pub landmark_motion_amp: f64,
    pub landmark_noise: f64,
    /// Fraction of fake frames with discontinuous landmark jumps.
    pub fake_spike_rate: f64,
    pub fake_spike_sigma: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            t: 100,
            h: 8,
            w: 8,
            c: 3,
            fps: 30.0,
            landmarks: 8,
            hr_low_hz: 0.8,
            hr_high_hz: 2.5,
            pulse_amp: 0.015,
            fake_pulse_scale: 0.4,
            fake_segment_min: 5,
            fake_segment_max: 15,
            pixel_noise: 0.01,
            bg_flicker: 0.012,
            landmark_motion_amp: 0.015,
            landmark_noise: 0.002,
            fake_spike_rate: 0.15,
            fake_spike_sigma: 0.018,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.t < 8 {
            return bad(format!("t must be >= 8, got {}", self.t));
        }
        if self.h == 0 || self.w == 0 || self.h % 4 != 0 || self.w % 4 != 0 {
            return bad(format!("h and w must be positive multiples of 4, got {}x{}", self.h, self.w));
        }
        if self.c == 0 {
            return bad("c must be positive".into());
        }
        if self.landmarks < 4 {
            return bad(format!("landmarks must be >= 4, got {}", self.landmarks));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if !(0.0 < self.hr_low_hz && self.hr_low_hz < self.hr_high_hz && self.hr_high_hz < self.fps / 2.0) {
            return bad(format!(
                "pulse band [{}, {}] must lie in (0, fps/2)",
                self.hr_low_hz, self.hr_high_hz
            ));
        }
        if self.fake_segment_min == 0 || self.fake_segment_min > self.fake_segment_max {
            return bad("fake segment range must satisfy 1 <= min <= max".into());
        }
        if !(0.0..=1.0).contains(&self.fake_spike_rate) {
            return bad("fake_spike_rate must lie in [0, 1]".into());
        }
        let non_negative = [
            self.pulse_amp,
            self.fake_pulse_scale,
            self.pixel_noise,
            self.bg_flicker,
            self.landmark_motion_amp,
            self.landmark_noise,
            self.fake_spike_sigma,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("amplitudes and noise levels must be finite and >= 0".into());
        }
        Ok(())
    }

    /// Fields as sorted `key=value` pairs.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        kv::to_pairs(self)
    }

    /// Inverse of [`SynthSpec::to_kv`]; unknown keys are rejected and missing
    /// keys keep their defaults.
    pub fn from_kv<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let spec = kv::from_pairs(&Self::default(), pairs, Error::InvalidSpec)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// One synthetic sample: HQ clip, HQ landmarks and the stored prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub clip: VideoClip,
    pub landmarks: LandmarkSequence,
    pub prompt: PromptText,
    pub label: Label,
    /// Per-sample seed for downstream degradations.
    pub seed: u64,
}

/// `n_per_class` real then `n_per_class` fake samples. Each sample is a pure
/// function of `(seed, label, index)`.
pub fn synth_dataset(n_per_class: usize, spec: &SynthSpec, seed: u64) -> Result<Vec<Sample>> {
    if n_per_class == 0 {
        return Err(Error::InvalidSpec("n_per_class must be >= 1".into()));
    }
    spec.validate()?;
    let mut out = Vec::with_capacity(2 * n_per_class);
    for label in [Label::Real, Label::Fake] {
        for k in 0..n_per_class {
            out.push(synth_sample(spec, seed, label, k));
        }
    }
    Ok(out)
}

/// Disjoint train and test splits drawn from independent derived seeds.
pub fn synth_splits(n_train: usize, n_test: usize, spec: &SynthSpec, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    Ok((
        synth_dataset(n_train, spec, rng::derive_seed(seed, &[rng::tag("train_split")]))?,
        synth_dataset(n_test, spec, rng::derive_seed(seed, &[rng::tag("test_split")]))?,
    ))
}

fn synth_sample(spec: &SynthSpec, seed: u64, label: Label, k: usize) -> Sample {
    let sample_seed = rng::derive_seed(seed, &[rng::tag("synth"), label.index() as u64, k as u64]);
    let mut r = rng::stream(sample_seed, &[rng::tag("content")]);
    let pulse = pulse_wave(spec, label, &mut r);
    let clip = render_clip(spec, label, &pulse, &mut r);
    let landmarks = render_landmarks(spec, label, &mut r);
    let prompt = make_prompt(label, rng::derive_seed(sample_seed, &[rng::tag("prompt")]), None);
    let tag = match label {
        Label::Real => "real",
        Label::Fake => "fake",
    };
    Sample {
        id: format!("{tag}-{k:05}"),
        clip,
        landmarks,
        prompt,
        label,
        seed: sample_seed,
    }
}

fn pulse_wave(spec: &SynthSpec, label: Label, r: &mut rng::Rng) -> Vec<f64> {
    let f = r.gen_range(spec.hr_low_hz..spec.hr_high_hz);
    let amp = spec.pulse_amp * r.gen_range(0.6..1.0);
    let mut phase = r.gen_range(0.0..2.0 * PI);
    match label {
        Label::Real => (0..spec.t)
            .map(|i| amp * (2.0 * PI * f * i as f64 / spec.fps + phase).sin())
            .collect(),
        Label::Fake => {
            let amp = amp * spec.fake_pulse_scale;
            let mut left = 0;
            (0..spec.t)
                .map(|i| {
                    if left == 0 {
                        phase = r.gen_range(0.0..2.0 * PI);
                        left = r.gen_range(spec.fake_segment_min..=spec.fake_segment_max);
                    }
                    left -= 1;
                    amp * (2.0 * PI * f * i as f64 / spec.fps + phase).sin()
                })
                .collect()
        }
    }
}

/// Face occupies the central square; the rest is background.
const FACE_HALF_WIDTH: f64 = 0.35;

fn render_clip(spec: &SynthSpec, label: Label, pulse: &[f64], r: &mut rng::Rng) -> VideoClip {
    let (t, h, w, c) = (spec.t, spec.h, spec.w, spec.c);
    let skin: Vec<f64> = (0..c).map(|ch| 0.55 - 0.1 * ch as f64 + r.gen_range(-0.05..0.05)).collect();
    let bg: Vec<f64> = (0..c).map(|_| r.gen_range(0.2..0.8)).collect();
    // Green-dominant pulse absorption.
    let weights: Vec<f64> = (0..c)
        .map(|ch| [0.4, 1.0, 0.6].get(ch).copied().unwrap_or(0.5) * r.gen_range(0.8..1.2))
        .collect();
    let noise = Normal::new(0.0, spec.pixel_noise.max(1e-300)).expect("finite");
    let flicker = Normal::new(0.0, spec.bg_flicker.max(1e-300)).expect("finite");
    let face = |i: usize, n: usize| ((i as f64 + 0.5) / n as f64 - 0.5).abs() < FACE_HALF_WIDTH;
    let mut frames = Vec::with_capacity(t * h * w * c);
    for &p in pulse.iter().take(t) {
        let fl = if spec.bg_flicker > 0.0 { flicker.sample(r) } else { 0.0 };
        for y in 0..h {
            for x in 0..w {
                let on_face = face(y, h) && face(x, w);
                for ch in 0..c {
                    let base = if on_face {
                        skin[ch] * (1.0 + weights[ch] * p)
                    } else {
                        bg[ch] + fl
                    };
                    let n = if spec.pixel_noise > 0.0 { noise.sample(r) } else { 0.0 };
                    frames.push((base + n).clamp(0.0, 1.0));
                }
            }
        }
    }
    VideoClip::new(frames, (t, h, w, c), spec.fps, Quality::HQ, label).expect("shape by construction")
}

fn render_landmarks(spec: &SynthSpec, label: Label, r: &mut rng::Rng) -> LandmarkSequence {
    let (t, l) = (spec.t, spec.landmarks);
    let base: Vec<(f64, f64)> = (0..l)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / l as f64;
            (0.5 + 0.2 * a.cos(), 0.5 + 0.25 * a.sin())
        })
        .collect();
    let mut osc = || {
        (
            spec.landmark_motion_amp * r.gen_range(0.5..1.0),
            r.gen_range(0.1..0.5),
            r.gen_range(0.0..2.0 * PI),
        )
    };
    let (ax, fx, px) = osc();
    let (ay, fy, py) = osc();
    let tracking = Normal::new(0.0, spec.landmark_noise.max(1e-300)).expect("finite");
    let spike = Normal::new(0.0, spec.fake_spike_sigma.max(1e-300)).expect("finite");
    let mut points = Vec::with_capacity(t * l * 2);
    for i in 0..t {
        let s = i as f64 / spec.fps;
        let dx = ax * (2.0 * PI * fx * s + px).sin();
        let dy = ay * (2.0 * PI * fy * s + py).sin();
        let jump = label == Label::Fake && r.gen_bool(spec.fake_spike_rate);
        for &(bx, by) in &base {
            for (b, d) in [(bx, dx), (by, dy)] {
                let mut v = b + d;
                if spec.landmark_noise > 0.0 {
                    v += tracking.sample(r);
                }
                if jump && spec.fake_spike_sigma > 0.0 {
                    v += spike.sample(r);
                }
                points.push(v);
            }
        }
    }
    LandmarkSequence::new(points, t, l, Quality::HQ, label).expect("shape by construction")
}

/// In-band peak power over the median power of all other non-DC bins.
pub fn pulse_prominence(trace: &[f64], cfg: &SpectralConfig) -> Result<f64> {
    let psd = power_spectral_density(trace, cfg)?;
    let (peak_bin, peak) = psd
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, (f, _))| *f >= cfg.band_low_hz && *f <= cfg.band_high_hz)
        .fold((0, -1.0), |acc, (k, &(_, p))| if p > acc.1 { (k, p) } else { acc });
    if peak_bin == 0 {
        return Err(Error::EmptyBand {
            low: cfg.band_low_hz,
            high: cfg.band_high_hz,
        });
    }
    let mut rest: Vec<f64> = psd
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(k, _)| *k != peak_bin)
        .map(|(_, &(_, p))| p)
        .collect();
    rest.sort_by(|a, b| a.total_cmp(b));
    let median = rest[rest.len() / 2];
    Ok(peak / median.max(f64::MIN_POSITIVE))
}
