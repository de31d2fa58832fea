//! Fusion by concatenation, the two-way classifier, cross-entropy and the
//! total-loss composition.

use serde::{Deserialize, Serialize};

use crate::encoders::Label;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Dense;

/// Probability clamp applied before logarithms.
pub const BCE_EPS: f64 = 1e-12;

/// Paper default for both `alpha` and `beta`.
pub const DEFAULT_LOSS_WEIGHT: f64 = 0.25;

/// `W_FC` stored as `[input, 2]`; column 1 scores "real".
pub type ClassifierParams = Dense;

pub fn classifier(input_dim: usize, bias: bool, rng: &mut Rng) -> ClassifierParams {
    Dense::new(input_dim, 2, bias, rng)
}

/// Concatenates `ẑ, ê, t̂` in that order.
pub fn fuse(z: Option<&[f64]>, e: Option<&[f64]>, t: Option<&[f64]>) -> Result<Vec<f64>> {
    let z = z.ok_or(Error::MissingModality("rppg"))?;
    let e = e.ok_or(Error::MissingModality("face"))?;
    let t = t.ok_or(Error::MissingModality("text"))?;
    Ok(fuse_segments(&[z, e, t]))
}

/// Order-stable concatenation of any number of segments.
pub fn fuse_segments(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub logits: [f64; 2],
    pub probabilities: [f64; 2],
}

impl Prediction {
    pub fn from_logits(logits: [f64; 2]) -> Self {
        let m = logits[0].max(logits[1]);
        let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
        let s = e[0] + e[1];
        Self {
            logits,
            probabilities: [e[0] / s, e[1] / s],
        }
    }

    /// Probability of the real class.
    pub fn p_real(&self) -> f64 {
        self.probabilities[Label::Real.index()]
    }
}

pub fn classify(u: &[f64], params: &ClassifierParams) -> Result<Prediction> {
    let l = params.try_forward(u, "classifier input")?;
    Ok(Prediction::from_logits([l[0], l[1]]))
}

/// Mean binary cross-entropy on `P(real)` and its gradient with respect to
/// each prediction's logits.
pub fn bce_with_grad(preds: &[Prediction], labels: &[Label]) -> Result<(f64, Vec<[f64; 2]>)> {
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    let n = preds.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(preds.len());
    for (p, y) in preds.iter().zip(labels) {
        let y = y.as_f64();
        let raw = p.p_real();
        let q = raw.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= y * q.ln() + (1.0 - y) * (1.0 - q).ln();
        // Softmax over two logits: dp/dl1 = p(1-p) = -dp/dl0.
        let d = if q == raw { (raw - y) / n } else { 0.0 };
        grads.push([-d, d]);
    }
    Ok((loss / n, grads))
}

pub fn bce_loss(preds: &[Prediction], labels: &[Label]) -> Result<f64> {
    Ok(bce_with_grad(preds, labels)?.0)
}

pub fn total_loss(bce: f64, phy: f64, aff: f64, alpha: f64, beta: f64) -> Result<f64> {
    for (what, v) in [("bce", bce), ("phy", phy), ("aff", aff), ("alpha", alpha), ("beta", beta)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(what));
        }
    }
    Ok(bce + alpha * phy + beta * aff)
}

/// Every loss term of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub bce: f64,
    pub hr: f64,
    pub pull: f64,
    pub push: f64,
    pub phy: f64,
    pub aff: f64,
    pub total: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LossBreakdown {
    pub fn compose(bce: f64, hr: f64, pull: f64, push: f64, aff: f64, alpha: f64, beta: f64) -> Result<Self> {
        let phy = hr + pull + push;
        Ok(Self {
            bce,
            hr,
            pull,
            push,
            phy,
            aff,
            total: total_loss(bce, phy, aff, alpha, beta)?,
            alpha,
            beta,
        })
    }

    pub fn recomposed_total(&self) -> f64 {
        self.bce + self.alpha * self.phy + self.beta * self.aff
    }

    pub const FIELDS: [&'static str; 9] = ["bce", "hr", "pull", "push", "phy", "aff", "total", "alpha", "beta"];

    pub fn values(&self) -> [f64; 9] {
        [
            self.bce, self.hr, self.pull, self.push, self.phy, self.aff, self.total, self.alpha, self.beta,
        ]
    }
}
