use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::{roi_trace, ModalityFeature, Modality, VideoClip, Z_DIM};

/// Toy physiological encoder.
///
/// The ROI intensity trace is mean-centred and scaled by a fixed gain, passed
/// through a residual temporal-convolution block
/// `y = x + mix_b + Σ_c mix_w[c]·tanh(conv_c(x))`, and linearly resampled to
/// [`Z_DIM`] samples spanning the clip. With `mix_w = 0` and `mix_b = 0` the
/// encoder is the identity on the resampled trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PEncoder {
    pub gain: f64,
    /// `[channels, kernel]`, kernel odd, zero "same" padding.
    pub conv_w: Tensor,
    pub conv_b: Tensor,
    pub mix_w: Tensor,
    pub mix_b: Tensor,
}

#[derive(Debug, Clone)]
pub struct PEncoderCache {
    x: Vec<f64>,
    act: Vec<f64>,
}

impl PEncoder {
    pub const DEFAULT_GAIN: f64 = 100.0;

    pub fn new(channels: usize, kernel: usize, gain: f64, rng: &mut Rng) -> Self {
        assert!(kernel % 2 == 1, "kernel must be odd");
        Self {
            gain,
            conv_w: Tensor::randn(&[channels, kernel], 1.0 / (kernel as f64).sqrt(), rng),
            conv_b: Tensor::randn(&[channels], 0.5, rng),
            mix_w: Tensor::randn(&[channels], 0.3 / (channels as f64).sqrt(), rng),
            mix_b: Tensor::zeros(&[1]),
        }
    }

    /// Random convolution, zero residual branch.
    pub fn identity(channels: usize, kernel: usize, gain: f64, rng: &mut Rng) -> Self {
        let mut p = Self::new(channels, kernel, gain, rng);
        p.mix_w = Tensor::zeros(&[channels]);
        p
    }

    pub fn channels(&self) -> usize {
        self.conv_w.shape[0]
    }

    pub fn kernel(&self) -> usize {
        self.conv_w.shape[1]
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            gain: self.gain,
            conv_w: self.conv_w.zeros_like(),
            conv_b: self.conv_b.zeros_like(),
            mix_w: self.mix_w.zeros_like(),
            mix_b: self.mix_b.zeros_like(),
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("conv_w", &self.conv_w),
            ("conv_b", &self.conv_b),
            ("mix_w", &self.mix_w),
            ("mix_b", &self.mix_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("conv_w", &mut self.conv_w),
            ("conv_b", &mut self.conv_b),
            ("mix_w", &mut self.mix_w),
            ("mix_b", &mut self.mix_b),
        ]
    }

    pub fn encode(&self, clip: &VideoClip) -> Result<ModalityFeature> {
        let (z, _) = self.forward(&roi_trace(clip))?;
        Ok(ModalityFeature {
            vector: z,
            modality: Modality::P,
            quality: clip.quality,
            label: clip.label,
        })
    }

    pub fn forward(&self, trace: &[f64]) -> Result<(Vec<f64>, PEncoderCache)> {
        let t = trace.len();
        if t < 2 {
            return Err(Error::TooShort { min: 2, got: t });
        }
        let mean = trace.iter().sum::<f64>() / t as f64;
        let x: Vec<f64> = trace.iter().map(|v| self.gain * (v - mean)).collect();
        let (ch, k) = (self.channels(), self.kernel());
        let r = k / 2;
        let mut act = vec![0.0; ch * t];
        let mut y: Vec<f64> = x.iter().map(|v| v + self.mix_b.data[0]).collect();
        for c in 0..ch {
            let w = self.conv_w.row(c);
            for i in 0..t {
                let mut h = self.conv_b.data[c];
                for (j, wj) in w.iter().enumerate() {
                    let src = i as isize + j as isize - r as isize;
                    if src >= 0 && (src as usize) < t {
                        h += wj * x[src as usize];
                    }
                }
                let a = h.tanh();
                act[c * t + i] = a;
                y[i] += self.mix_w.data[c] * a;
            }
        }
        Ok((resample(&y, Z_DIM), PEncoderCache { x, act }))
    }

    /// Parameter gradients given `dL/dz`.
    pub fn backward(&self, cache: &PEncoderCache, dz: &[f64]) -> PEncoder {
        let t = cache.x.len();
        let dy = resample_transpose(dz, t);
        let (ch, k) = (self.channels(), self.kernel());
        let r = k / 2;
        let mut g = self.zeros_like();
        g.mix_b.data[0] = dy.iter().sum();
        for c in 0..ch {
            let mw = self.mix_w.data[c];
            let act = &cache.act[c * t..(c + 1) * t];
            g.mix_w.data[c] = dy.iter().zip(act).map(|(d, a)| d * a).sum();
            let mut db = 0.0;
            let gw = g.conv_w.row_mut(c);
            for i in 0..t {
                let dh = dy[i] * mw * (1.0 - act[i] * act[i]);
                if dh == 0.0 {
                    continue;
                }
                db += dh;
                for (j, gwj) in gw.iter_mut().enumerate() {
                    let src = i as isize + j as isize - r as isize;
                    if src >= 0 && (src as usize) < t {
                        *gwj += dh * cache.x[src as usize];
                    }
                }
            }
            g.conv_b.data[c] = db;
        }
        g
    }
}

fn interp_weights(k: usize, t: usize, n: usize) -> (usize, f64) {
    let pos = k as f64 * (t - 1) as f64 / (n - 1) as f64;
    let i = (pos.floor() as usize).min(t - 2);
    (i, pos - i as f64)
}

/// Linear resampling of `y` to `n` points over the same span.
pub(crate) fn resample(y: &[f64], n: usize) -> Vec<f64> {
    let t = y.len();
    (0..n)
        .map(|k| {
            let (i, f) = interp_weights(k, t, n);
            (1.0 - f) * y[i] + f * y[i + 1]
        })
        .collect()
}

fn resample_transpose(dz: &[f64], t: usize) -> Vec<f64> {
    let n = dz.len();
    let mut dy = vec![0.0; t];
    for (k, d) in dz.iter().enumerate() {
        let (i, f) = interp_weights(k, t, n);
        dy[i] += (1.0 - f) * d;
        dy[i + 1] += f * d;
    }
    dy
}
