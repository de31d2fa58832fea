use rand::Rng as _;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::rng;

use super::{Label, Quality};

/// `t` frames of `l` landmarks, each an `(x, y)` pair in normalized image
/// coordinates, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSequence {
    pub points: Vec<f64>,
    pub t: usize,
    pub l: usize,
    pub quality: Quality,
    pub label: Label,
}

impl LandmarkSequence {
    pub fn new(points: Vec<f64>, t: usize, l: usize, quality: Quality, label: Label) -> Result<Self> {
        if points.len() != t * l * 2 {
            return Err(Error::ShapeMismatch(format!(
                "landmarks {t}x{l}x2 need {} values, got {}",
                t * l * 2,
                points.len()
            )));
        }
        if l < 4 {
            return Err(Error::ShapeMismatch(format!("need at least 4 landmarks, got {l}")));
        }
        Ok(Self {
            points,
            t,
            l,
            quality,
            label,
        })
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let n = self.l * 2;
        &self.points[i * n..(i + 1) * n]
    }

    /// Frames at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut points = Vec::with_capacity(indices.len() * self.l * 2);
        for &i in indices {
            points.extend_from_slice(self.frame(i));
        }
        Self {
            points,
            t: indices.len(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        Self {
            points: Vec::new(),
            t: self.t,
            l: self.l,
            quality: self.quality,
            label: self.label,
        }
    }
}

/// Adds i.i.d. `N(0, σ²)` noise to every coordinate. Coordinates are not
/// clamped, so heavy noise can leave the unit square.
pub fn perturb_landmarks(seq: &LandmarkSequence, sigma: f64, seed: u64) -> Result<LandmarkSequence> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut out = seq.clone();
    out.quality = Quality::LQ;
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut r = rng::stream(seed, &[rng::tag("perturb_landmarks")]);
    for p in out.points.iter_mut() {
        *p += r.sample(normal);
    }
    Ok(out)
}
