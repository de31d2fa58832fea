use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Dense, Tensor};

use super::{LandmarkSequence, ModalityFeature, Modality, E_DIM};

/// Elman recurrence `h_t = tanh(u_t·Wx + h_{t-1}·Wh + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rnn {
    pub wx: Tensor,
    pub wh: Tensor,
    pub b: Tensor,
}

impl Rnn {
    fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut wh = Tensor::randn(&[hidden, hidden], 0.1 / (hidden as f64).sqrt(), rng);
        // Leaky-integrator start so early frames are not forgotten immediately.
        for i in 0..hidden {
            wh.data[i * hidden + i] += 0.8;
        }
        Self {
            wx: Tensor::randn(&[input, hidden], 1.0 / (input as f64).sqrt(), rng),
            wh,
            b: Tensor::zeros(&[hidden]),
        }
    }

    fn hidden(&self) -> usize {
        self.b.len()
    }

    fn zeros_like(&self) -> Self {
        Self {
            wx: self.wx.zeros_like(),
            wh: self.wh.zeros_like(),
            b: self.b.zeros_like(),
        }
    }

    /// Returns all hidden states, `t × hidden`.
    fn run(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
        let mut prev = vec![0.0; h];
        for u in inputs {
            let mut a = self.b.data.clone();
            for (i, &ui) in u.iter().enumerate() {
                for (aj, w) in a.iter_mut().zip(self.wx.row(i)) {
                    *aj += ui * w;
                }
            }
            for (i, &pi) in prev.iter().enumerate() {
                for (aj, w) in a.iter_mut().zip(self.wh.row(i)) {
                    *aj += pi * w;
                }
            }
            a.iter_mut().for_each(|v| *v = v.tanh());
            prev = a.clone();
            states.push(a);
        }
        states
    }

    /// Backpropagation through time from `dh_last` on the final state.
    fn backward(&self, inputs: &[Vec<f64>], states: &[Vec<f64>], dh_last: &[f64], g: &mut Rnn) {
        let h = self.hidden();
        let mut dh = dh_last.to_vec();
        let zero = vec![0.0; h];
        for t in (0..inputs.len()).rev() {
            let da: Vec<f64> = dh
                .iter()
                .zip(&states[t])
                .map(|(d, s)| d * (1.0 - s * s))
                .collect();
            let prev = if t == 0 { &zero } else { &states[t - 1] };
            for (gb, d) in g.b.data.iter_mut().zip(&da) {
                *gb += d;
            }
            for (i, &ui) in inputs[t].iter().enumerate() {
                for (gw, d) in g.wx.row_mut(i).iter_mut().zip(&da) {
                    *gw += ui * d;
                }
            }
            for (i, &pi) in prev.iter().enumerate() {
                for (gw, d) in g.wh.row_mut(i).iter_mut().zip(&da) {
                    *gw += pi * d;
                }
            }
            if t > 0 {
                dh = (0..h)
                    .map(|i| self.wh.row(i).iter().zip(&da).map(|(w, d)| w * d).sum())
                    .collect();
            }
        }
    }
}

/// Toy landmark encoder: one recurrent pass over centred positions and one
/// over frame-to-frame motion; the two final hidden states are concatenated
/// and projected to [`E_DIM`].
#[derive(Debug, Clone, PartialEq)]
pub struct LEncoder {
    pub landmarks: usize,
    pub pos_gain: f64,
    pub motion_gain: f64,
    pub pos: Rnn,
    pub motion: Rnn,
    pub out: Dense,
}

#[derive(Debug, Clone)]
pub struct LEncoderCache {
    pos_in: Vec<Vec<f64>>,
    mot_in: Vec<Vec<f64>>,
    pos_h: Vec<Vec<f64>>,
    mot_h: Vec<Vec<f64>>,
    last: Vec<f64>,
}

impl LEncoder {
    pub const DEFAULT_POS_GAIN: f64 = 10.0;
    pub const DEFAULT_MOTION_GAIN: f64 = 10.0;

    pub fn new(landmarks: usize, hidden: usize, rng: &mut Rng) -> Self {
        let d = landmarks * 2;
        Self {
            landmarks,
            pos_gain: Self::DEFAULT_POS_GAIN,
            motion_gain: Self::DEFAULT_MOTION_GAIN,
            pos: Rnn::new(d, hidden, rng),
            motion: Rnn::new(d, hidden, rng),
            out: Dense::new(2 * hidden, E_DIM, true, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            landmarks: self.landmarks,
            pos_gain: self.pos_gain,
            motion_gain: self.motion_gain,
            pos: self.pos.zeros_like(),
            motion: self.motion.zeros_like(),
            out: self.out.zeros_like(),
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("pos.wx", &self.pos.wx),
            ("pos.wh", &self.pos.wh),
            ("pos.b", &self.pos.b),
            ("motion.wx", &self.motion.wx),
            ("motion.wh", &self.motion.wh),
            ("motion.b", &self.motion.b),
            ("out.w", &self.out.w),
            ("out.b", self.out.b.as_ref().expect("bias")),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("pos.wx", &mut self.pos.wx),
            ("pos.wh", &mut self.pos.wh),
            ("pos.b", &mut self.pos.b),
            ("motion.wx", &mut self.motion.wx),
            ("motion.wh", &mut self.motion.wh),
            ("motion.b", &mut self.motion.b),
            ("out.w", &mut self.out.w),
            ("out.b", self.out.b.as_mut().expect("bias")),
        ]
    }

    pub fn encode(&self, seq: &LandmarkSequence) -> Result<ModalityFeature> {
        let (e, _) = self.forward(seq)?;
        Ok(ModalityFeature {
            vector: e,
            modality: Modality::L,
            quality: seq.quality,
            label: seq.label,
        })
    }

    pub fn forward(&self, seq: &LandmarkSequence) -> Result<(Vec<f64>, LEncoderCache)> {
        if seq.l != self.landmarks {
            return Err(Error::DimMismatch {
                what: "landmark count",
                expected: self.landmarks,
                got: seq.l,
            });
        }
        if seq.t < 2 {
            return Err(Error::TooShort { min: 2, got: seq.t });
        }
        let pos_in: Vec<Vec<f64>> = (0..seq.t)
            .map(|i| seq.frame(i).iter().map(|v| self.pos_gain * (v - 0.5)).collect())
            .collect();
        let mot_in: Vec<Vec<f64>> = (0..seq.t)
            .map(|i| {
                if i == 0 {
                    vec![0.0; seq.l * 2]
                } else {
                    seq.frame(i)
                        .iter()
                        .zip(seq.frame(i - 1))
                        .map(|(a, b)| self.motion_gain * (a - b))
                        .collect()
                }
            })
            .collect();
        let pos_h = self.pos.run(&pos_in);
        let mot_h = self.motion.run(&mot_in);
        let mut last = pos_h.last().unwrap().clone();
        last.extend_from_slice(mot_h.last().unwrap());
        let e = self.out.forward(&last);
        Ok((
            e,
            LEncoderCache {
                pos_in,
                mot_in,
                pos_h,
                mot_h,
                last,
            },
        ))
    }

    pub fn backward(&self, cache: &LEncoderCache, de: &[f64]) -> LEncoder {
        let mut g = self.zeros_like();
        let dlast = self.out.backward(&cache.last, de, &mut g.out);
        let h = self.pos.hidden();
        self.pos.backward(&cache.pos_in, &cache.pos_h, &dlast[..h], &mut g.pos);
        self.motion.backward(&cache.mot_in, &cache.mot_h, &dlast[h..], &mut g.motion);
        g
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Label, Quality};
    use super::*;
    use crate::rng::stream;

    fn seq(t: usize, jitter: bool) -> LandmarkSequence {
        let l = 4;
        let pts = (0..t * l * 2)
            .map(|i| {
                let base = 0.3 + 0.05 * (i % (l * 2)) as f64;
                if jitter && (i / (l * 2)) % 3 == 0 {
                    base + 0.02
                } else {
                    base
                }
            })
            .collect();
        LandmarkSequence::new(pts, t, l, Quality::HQ, Label::Real).unwrap()
    }

    #[test]
    fn dims_determinism_and_sensitivity() {
        let mut rng = stream(5, &[]);
        let enc = LEncoder::new(4, 6, &mut rng);
        let still = enc.encode(&seq(20, false)).unwrap();
        assert_eq!(still.vector.len(), E_DIM);
        assert_eq!(still, enc.encode(&seq(20, false)).unwrap());
        assert_ne!(still.vector, enc.encode(&seq(20, true)).unwrap().vector);
        assert!(matches!(
            LEncoder::new(5, 6, &mut rng).encode(&seq(20, false)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = stream(6, &[]);
        let enc = LEncoder::new(4, 3, &mut rng);
        let s = seq(7, true);
        let de: Vec<f64> = (0..E_DIM).map(|k| ((k * 31) % 11) as f64 / 11.0 - 0.5).collect();
        let loss = |e: &LEncoder| -> f64 {
            e.forward(&s).unwrap().0.iter().zip(&de).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = enc.forward(&s).unwrap();
        let g = enc.backward(&cache, &de);
        let h = 1e-6;
        let count = enc.tensors().len();
        for ti in 0..count {
            let n = enc.tensors()[ti].1.len();
            for idx in (0..n).step_by(3) {
                let mut p = enc.clone();
                p.tensors_mut()[ti].1.data[idx] += h;
                let mut m = enc.clone();
                m.tensors_mut()[ti].1.data[idx] -= h;
                let num = (loss(&p) - loss(&m)) / (2.0 * h);
                let ana = g.tensors()[ti].1.data[idx];
                assert!(
                    (num - ana).abs() < 1e-6 * (1.0 + num.abs()),
                    "{}[{idx}]: {num} vs {ana}",
                    enc.tensors()[ti].0
                );
            }
        }
    }
}
