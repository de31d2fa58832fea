use std::f64::consts::PI;

use rand::seq::SliceRandom;

use crate::encoders::Label;
use crate::error::{Error, Result};
use crate::rng;

use super::{Schedule, TrainConfig};

/// One epoch of index batches. Each batch holds `batch_size/2` real indices
/// followed by `batch_size/2` fake indices; position `k` among the reals is
/// paired with position `k` among the fakes. Leftover samples are dropped.
pub fn balanced_batches(labels: &[Label], batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size < 2 || batch_size % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "batch_size must be even and >= 2, got {batch_size}"
        )));
    }
    let half = batch_size / 2;
    let mut real: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Real).collect();
    let mut fake: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Fake).collect();
    for (class, v) in [("real", &real), ("fake", &fake)] {
        if v.len() < half {
            return Err(Error::InsufficientClassSamples {
                class,
                need: half,
                have: v.len(),
            });
        }
    }
    let mut r = rng::stream(seed, &[rng::tag("balanced_batches"), epoch]);
    real.shuffle(&mut r);
    fake.shuffle(&mut r);
    let n = real.len().min(fake.len()) / half;
    Ok((0..n)
        .map(|b| {
            let mut batch = real[b * half..(b + 1) * half].to_vec();
            batch.extend_from_slice(&fake[b * half..(b + 1) * half]);
            batch
        })
        .collect())
}

/// Learning rate at `step` of `total_steps`.
///
/// With `t = step/(total_steps−1)` and warm-up fraction `w`: `lr_init` while
/// `t ≤ w`, then `lr_final + ½(lr_init − lr_final)(1 + cos πp)` with
/// `p = (t − w)/(1 − w)`. The two-phase schedule jumps straight to `lr_final`.
pub fn lr_at(step: usize, total_steps: usize, cfg: &TrainConfig) -> f64 {
    if total_steps <= 1 {
        return cfg.lr_init;
    }
    let t = step.min(total_steps - 1) as f64 / (total_steps - 1) as f64;
    let w = cfg.warmup_fraction;
    if t <= w {
        return cfg.lr_init;
    }
    match cfg.schedule {
        Schedule::TwoPhase => cfg.lr_final,
        Schedule::Cosine => {
            let p = (t - w) / (1.0 - w);
            cfg.lr_final + 0.5 * (cfg.lr_init - cfg.lr_final) * (1.0 + (PI * p).cos())
        }
    }
}
