//! Correlation losses, spectral heart-rate estimation and the cross-quality
//! similarity (CQSL) loss stack over rPPG-style signals.
//!
//! Every loss has a slice-level kernel returning analytic gradients; the typed
//! wrappers over [`SignalVector`] validate inputs and drop the gradients.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to variance and norm denominators.
pub const EPS: f64 = 1e-8;

/// How degenerate denominators are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Guard {
    /// Floor each denominator term at [`EPS`] and carry on.
    #[default]
    Lenient,
    /// Fail with `ZeroVariance` / `ZeroNorm` when a denominator term is below [`EPS`].
    Strict,
}

/// A finite real signal of length K ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector(Vec<f64>);

impl SignalVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                min: 2,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for SignalVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub fps: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
}

impl SpectralConfig {
    pub fn new(fps: f64, band_low_hz: f64, band_high_hz: f64) -> Result<Self> {
        let cfg = Self {
            fps,
            band_low_hz,
            band_high_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_fps(fps: f64) -> Result<Self> {
        let d = Self::default();
        Self::new(fps, d.band_low_hz, d.band_high_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fps.is_finite()
            && self.fps > 0.0
            && self.band_low_hz > 0.0
            && self.band_low_hz < self.band_high_hz
            && self.band_high_hz < self.fps / 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpectralConfig(format!(
                "need 0 < low < high < fps/2, got fps={} band=[{}, {}]",
                self.fps, self.band_low_hz, self.band_high_hz
            )))
        }
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        self.fps / k as f64
    }
}

impl Default for SpectralConfig {
    /// 30 fps, 0.7–4.0 Hz (42–240 bpm).
    fn default() -> Self {
        Self {
            fps: 30.0,
            band_low_hz: 0.7,
            band_high_hz: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeartRateEstimate {
    pub bpm: f64,
    pub bin_index: usize,
    pub peak_power: f64,
}

fn check_same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// Negative Pearson correlation `1 - r` with gradients with respect to both
/// inputs.
///
/// Evaluated in the raw-sum form `K Σxy − Σx Σy` over
/// `sqrt((K Σx² − (Σx)²)(K Σy² − (Σy)²))`, with each variance term floored
/// at [`EPS`] under [`Guard::Lenient`].
pub fn npc_with_grad(x: &[f64], y: &[f64], guard: Guard) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_same_len(x, y)?;
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    // Centered forms are numerically kinder and algebraically identical:
    // K Σxy − ΣxΣy = K Σ xc·yc,  K Σx² − (Σx)² = K Σ xc².
    let num = k * xc.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>();
    let vx = k * xc.iter().map(|a| a * a).sum::<f64>();
    let vy = k * yc.iter().map(|a| a * a).sum::<f64>();
    let (a, b) = match guard {
        Guard::Strict => {
            if vx < EPS || vy < EPS {
                return Err(Error::ZeroVariance("npc_loss"));
            }
            (vx, vy)
        }
        Guard::Lenient => (vx.max(EPS), vy.max(EPS)),
    };
    let den = (a * b).sqrt();
    let r = num / den;
    // dr/dx_i = K yc_i / den − r K xc_i / a
    let gx: Vec<f64> = xc
        .iter()
        .zip(&yc)
        .map(|(xi, yi)| -(k * yi / den - r * k * xi / a))
        .collect();
    let gy: Vec<f64> = xc
        .iter()
        .zip(&yc)
        .map(|(xi, yi)| -(k * xi / den - r * k * yi / b))
        .collect();
    Ok((1.0 - r, gx, gy))
}

/// Absolute uncentered cosine `|Σxy| / sqrt(Σx² Σy²)` with gradients.
/// The gradient at exactly zero correlation is taken as zero.
pub fn mpc_with_grad(x: &[f64], y: &[f64], guard: Guard) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_same_len(x, y)?;
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum();
    let ny: f64 = y.iter().map(|a| a * a).sum();
    let (a, b) = match guard {
        Guard::Strict => {
            if nx < EPS || ny < EPS {
                return Err(Error::ZeroNorm("mpc_loss"));
            }
            (nx, ny)
        }
        Guard::Lenient => (nx.max(EPS), ny.max(EPS)),
    };
    let den = (a * b).sqrt();
    let c = dot / den;
    let s = if c > 0.0 {
        1.0
    } else if c < 0.0 {
        -1.0
    } else {
        0.0
    };
    let gx = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| s * (yi / den - c * xi / a))
        .collect();
    let gy = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| s * (xi / den - c * yi / b))
        .collect();
    Ok((c.abs(), gx, gy))
}

pub fn npc_loss(x: &SignalVector, y: &SignalVector) -> Result<f64> {
    npc_loss_with(x, y, Guard::Lenient)
}

pub fn npc_loss_with(x: &SignalVector, y: &SignalVector, guard: Guard) -> Result<f64> {
    npc_with_grad(x.as_slice(), y.as_slice(), guard).map(|r| r.0)
}

pub fn mpc_loss(x: &SignalVector, y: &SignalVector) -> Result<f64> {
    mpc_loss_with(x, y, Guard::Lenient)
}

pub fn mpc_loss_with(x: &SignalVector, y: &SignalVector, guard: Guard) -> Result<f64> {
    mpc_with_grad(x.as_slice(), y.as_slice(), guard).map(|r| r.0)
}

/// Magnitude-squared unnormalized DFT over bins `0..=K/2`, paired with each
/// bin's frequency in Hz.
pub fn power_spectral_density(x: &[f64], cfg: &SpectralConfig) -> Result<Vec<(f64, f64)>> {
    if x.len() < 4 {
        return Err(Error::TooShort {
            min: 4,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("power_spectral_density"));
    }
    cfg.validate()?;
    let k = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(k).process(&mut buf);
    let df = cfg.bin_hz(k);
    Ok(buf[..=k / 2]
        .iter()
        .enumerate()
        .map(|(i, c)| (i as f64 * df, c.norm_sqr()))
        .collect())
}

/// Peak of the PSD inside the configured band; ties go to the lower bin.
pub fn estimate_heart_rate(x: &[f64], cfg: &SpectralConfig) -> Result<HeartRateEstimate> {
    let psd = power_spectral_density(x, cfg)?;
    let mut best: Option<(usize, f64, f64)> = None;
    // DC is never a heart rate.
    for (i, &(f, p)) in psd.iter().enumerate().skip(1) {
        if f < cfg.band_low_hz || f > cfg.band_high_hz {
            continue;
        }
        match best {
            Some((_, _, bp)) if p <= bp => {}
            _ => best = Some((i, f, p)),
        }
    }
    let (bin_index, freq, peak_power) = best.ok_or(Error::EmptyBand {
        low: cfg.band_low_hz,
        high: cfg.band_high_hz,
    })?;
    if peak_power <= EPS {
        return Err(Error::ZeroVariance("estimate_heart_rate"));
    }
    Ok(HeartRateEstimate {
        bpm: 60.0 * freq,
        bin_index,
        peak_power,
    })
}

/// `‖h_hq − h_lq‖₂` for scalar heart rates.
pub fn hr_consistency_loss(h_hq: &HeartRateEstimate, h_lq: &HeartRateEstimate) -> f64 {
    (h_hq.bpm - h_lq.bpm).abs()
}

/// rPPG features of one real and one fake sample, each at both qualities.
#[derive(Debug, Clone, Copy)]
pub struct Quadruple<'a> {
    pub hq_real: &'a [f64],
    pub lq_real: &'a [f64],
    pub hq_fake: &'a [f64],
    pub lq_fake: &'a [f64],
}

impl<'a> Quadruple<'a> {
    pub fn new(
        hq_real: &'a SignalVector,
        lq_real: &'a SignalVector,
        hq_fake: &'a SignalVector,
        lq_fake: &'a SignalVector,
    ) -> Self {
        Self {
            hq_real: hq_real.as_slice(),
            lq_real: lq_real.as_slice(),
            hq_fake: hq_fake.as_slice(),
            lq_fake: lq_fake.as_slice(),
        }
    }

    fn check(&self) -> Result<()> {
        let k = self.hq_real.len();
        for s in [self.lq_real, self.hq_fake, self.lq_fake] {
            check_same_len(self.hq_real, s)?;
        }
        if k < 2 {
            return Err(Error::TooShort { min: 2, got: k });
        }
        Ok(())
    }
}

/// Per-term values of the physiological loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhyTerms {
    pub hr: f64,
    pub pull: f64,
    pub push: f64,
}

impl PhyTerms {
    pub fn total(&self) -> f64 {
        self.hr + self.pull + self.push
    }
}

/// Gradients of a weighted CQSL objective with respect to the four features,
/// in `[hq_real, lq_real, hq_fake, lq_fake]` order.
pub type QuadGrad = [Vec<f64>; 4];

/// Weights applied to each CQSL term when accumulating gradients.
#[derive(Debug, Clone, Copy)]
pub struct PhyWeights {
    pub hr: f64,
    pub pull: f64,
    pub push: f64,
}

impl PhyWeights {
    pub const UNIT: PhyWeights = PhyWeights {
        hr: 1.0,
        pull: 1.0,
        push: 1.0,
    };
}

/// Full CQSL stack on one quadruple with gradients of
/// `w.pull·pull + w.push·push + w.hr·hr`. The heart-rate term is piecewise
/// constant in the features (argmax of the spectrum), so it contributes no
/// gradient.
pub fn phy_with_grad(
    q: Quadruple<'_>,
    cfg: &SpectralConfig,
    guard: Guard,
    w: PhyWeights,
) -> Result<(PhyTerms, QuadGrad)> {
    q.check()?;
    let k = q.hq_real.len();
    let feats = [q.hq_real, q.lq_real, q.hq_fake, q.lq_fake];
    let mut grads: QuadGrad = std::array::from_fn(|_| vec![0.0; k]);
    let mut acc = |idx: usize, g: &[f64], scale: f64| {
        for (a, b) in grads[idx].iter_mut().zip(g) {
            *a += scale * b;
        }
    };

    let mut pull = 0.0;
    for (a, b) in [(0, 1), (2, 3)] {
        let (v, ga, gb) = npc_with_grad(feats[a], feats[b], guard)?;
        pull += v;
        acc(a, &ga, w.pull);
        acc(b, &gb, w.pull);
    }

    let mut push = 0.0;
    for (a, b) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        let (v, ga, gb) = mpc_with_grad(feats[a], feats[b], guard)?;
        push += v;
        acc(a, &ga, w.push);
        acc(b, &gb, w.push);
    }

    let hr = {
        let h: Vec<HeartRateEstimate> = feats
            .iter()
            .map(|f| estimate_heart_rate(f, cfg))
            .collect::<Result<_>>()?;
        hr_consistency_loss(&h[0], &h[1]) + hr_consistency_loss(&h[2], &h[3])
    };

    Ok((PhyTerms { hr, pull, push }, grads))
}

/// `npc(hq_real, lq_real) + npc(hq_fake, lq_fake)`.
pub fn cqsl_pull_loss(q: Quadruple<'_>) -> Result<f64> {
    q.check()?;
    Ok(npc_with_grad(q.hq_real, q.lq_real, Guard::Lenient)?.0
        + npc_with_grad(q.hq_fake, q.lq_fake, Guard::Lenient)?.0)
}

/// Sum of `mpc` over the four real×fake cross-quality pairs.
pub fn cqsl_push_loss(q: Quadruple<'_>) -> Result<f64> {
    q.check()?;
    let mut s = 0.0;
    for (a, b) in [
        (q.hq_real, q.hq_fake),
        (q.hq_real, q.lq_fake),
        (q.lq_real, q.hq_fake),
        (q.lq_real, q.lq_fake),
    ] {
        s += mpc_with_grad(a, b, Guard::Lenient)?.0;
    }
    Ok(s)
}

/// `L_HR + L_pull + L_push`, with the components reported individually.
pub fn phy_loss(q: Quadruple<'_>, cfg: &SpectralConfig) -> Result<(f64, PhyTerms)> {
    let (terms, _) = phy_with_grad(q, cfg, Guard::Lenient, PhyWeights::UNIT)?;
    Ok((terms.total(), terms))
}

/// Samples a unit sinusoid at `freq_hz`; test and generator helper.
pub fn sinusoid(k: usize, fps: f64, freq_hz: f64, amplitude: f64, phase: f64) -> Vec<f64> {
    (0..k)
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / fps + phase).sin())
        .collect()
}
