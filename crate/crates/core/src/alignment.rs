//! Projection into the shared space, HQ/LQ averaging, the row-stacked joint
//! embedding, the affinity matrix and the affinity-driven alignment (ASA) loss.

use crate::encoders::{Modality, ModalityFeature};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::signal::EPS;
use crate::tensor::Dense;

/// Width of the shared embedding space.
pub const D_SHARED: usize = 320;

/// One affine projection per enabled modality, shared by HQ and LQ inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionParams {
    pub rppg: Option<Dense>,
    pub face: Option<Dense>,
    pub text: Option<Dense>,
}

impl ProjectionParams {
    pub fn new(modalities: &[Modality], rng: &mut Rng) -> Self {
        let mut make = |m: Modality| {
            modalities
                .contains(&m)
                .then(|| Dense::new(m.feature_dim(), D_SHARED, true, rng))
        };
        Self {
            rppg: make(Modality::P),
            face: make(Modality::L),
            text: make(Modality::T),
        }
    }

    pub fn get(&self, m: Modality) -> Option<&Dense> {
        match m {
            Modality::P => self.rppg.as_ref(),
            Modality::L => self.face.as_ref(),
            Modality::T => self.text.as_ref(),
        }
    }

    pub fn get_mut(&mut self, m: Modality) -> Option<&mut Dense> {
        match m {
            Modality::P => self.rppg.as_mut(),
            Modality::L => self.face.as_mut(),
            Modality::T => self.text.as_mut(),
        }
    }

    pub fn name(m: Modality) -> &'static str {
        match m {
            Modality::P => "rppg",
            Modality::L => "face",
            Modality::T => "text",
        }
    }
}

/// `W·x + B` for the feature's modality; the quality tag is ignored.
pub fn project(feature: &ModalityFeature, params: &ProjectionParams) -> Result<Vec<f64>> {
    let layer = params
        .get(feature.modality)
        .ok_or(Error::MissingModality(ProjectionParams::name(feature.modality)))?;
    layer.try_forward(&feature.vector, "projection input")
}

/// Elementwise mean of two `B × d` batches.
pub fn average_quality(hq: &[Vec<f64>], lq: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if hq.len() != lq.len() {
        return Err(Error::ShapeMismatch(format!(
            "HQ batch has {} rows, LQ has {}",
            hq.len(),
            lq.len()
        )));
    }
    hq.iter()
        .zip(lq)
        .map(|(a, b)| {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch(format!(
                    "HQ row has {} columns, LQ has {}",
                    a.len(),
                    b.len()
                )));
            }
            Ok(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect())
        })
        .collect()
}

/// Maps a joint row to `(sample, modality slot)` and back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockIndex {
    pub batch: usize,
    pub modalities: Vec<Modality>,
}

impl BlockIndex {
    pub fn m(&self) -> usize {
        self.modalities.len()
    }

    pub fn rows(&self) -> usize {
        self.batch * self.m()
    }

    pub fn row(&self, sample: usize, slot: usize) -> usize {
        sample * self.m() + slot
    }

    pub fn locate(&self, row: usize) -> (usize, usize) {
        (row / self.m(), row % self.m())
    }
}

/// Stacks `Ẑ, Ê, T̂` as rows `(0,P), (0,L), (0,T), (1,P), …`.
pub fn build_joint_rows(
    z: &[Vec<f64>],
    e: &[Vec<f64>],
    t: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, BlockIndex)> {
    build_joint_rows_from(&[(Modality::P, z), (Modality::L, e), (Modality::T, t)])
}

/// Row-stacks any ordered set of per-modality batches.
pub fn build_joint_rows_from(parts: &[(Modality, &[Vec<f64>])]) -> Result<(Vec<Vec<f64>>, BlockIndex)> {
    let batch = parts.first().map_or(0, |p| p.1.len());
    if let Some((m, p)) = parts.iter().find(|p| p.1.len() != batch) {
        return Err(Error::ShapeMismatch(format!(
            "modality {} has {} samples, expected {batch}",
            m.short(),
            p.len()
        )));
    }
    let index = BlockIndex {
        batch,
        modalities: parts.iter().map(|p| p.0).collect(),
    };
    let mut rows = Vec::with_capacity(index.rows());
    for b in 0..batch {
        for (_, p) in parts {
            rows.push(p[b].clone());
        }
    }
    Ok((rows, index))
}

/// Symmetric `N × N` matrix of `(1 + cos)/2` scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub n: usize,
    pub scores: Vec<f64>,
}

impl AffinityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.n + j]
    }
}

fn unit_rows(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut units = Vec::with_capacity(rows.len());
    let mut norms = Vec::with_capacity(rows.len());
    for r in rows {
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n > EPS) {
            return Err(Error::ZeroNorm("affinity row"));
        }
        units.push(r.iter().map(|v| v / n).collect());
        norms.push(n);
    }
    Ok((units, norms))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn affinity(rows: &[Vec<f64>]) -> Result<AffinityMatrix> {
    let (u, _) = unit_rows(rows)?;
    let n = u.len();
    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        scores[i * n + i] = 1.0;
        for j in i + 1..n {
            let a = 0.5 * (1.0 + dot(&u[i], &u[j]));
            scores[i * n + j] = a;
            scores[j * n + i] = a;
        }
    }
    Ok(AffinityMatrix { n, scores })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pair {
    Positive,
    Negative,
    Ignored,
}

fn classify_pair(index: &BlockIndex, i: usize, j: usize) -> Pair {
    let (bi, mi) = index.locate(i);
    let (bj, mj) = index.locate(j);
    match (bi == bj, mi == mj) {
        (_, true) => Pair::Ignored,
        (true, false) => Pair::Positive,
        (false, false) => Pair::Negative,
    }
}

/// `(1/B)[Σ_pos (1 − A)² + Σ_neg A²]` over unordered cross-modality pairs.
pub fn asa_loss(a: &AffinityMatrix, index: &BlockIndex) -> f64 {
    let mut s = 0.0;
    for i in 0..a.n {
        for j in i + 1..a.n {
            let v = a.get(i, j);
            match classify_pair(index, i, j) {
                Pair::Positive => s += (1.0 - v).powi(2),
                Pair::Negative => s += v * v,
                Pair::Ignored => {}
            }
        }
    }
    s / index.batch as f64
}

/// ASA loss and its gradient with respect to every (unnormalized) input row.
pub fn asa_with_grad(rows: &[Vec<f64>], index: &BlockIndex) -> Result<(f64, Vec<Vec<f64>>)> {
    if rows.len() != index.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} joint rows for a {}×{} block index",
            rows.len(),
            index.batch,
            index.m()
        )));
    }
    let (u, norms) = unit_rows(rows)?;
    let n = u.len();
    let inv_b = 1.0 / index.batch as f64;
    let mut loss = 0.0;
    let mut du: Vec<Vec<f64>> = u.iter().map(|r| vec![0.0; r.len()]).collect();
    for i in 0..n {
        for j in i + 1..n {
            let kind = classify_pair(index, i, j);
            if kind == Pair::Ignored {
                continue;
            }
            let a = 0.5 * (1.0 + dot(&u[i], &u[j]));
            // dL/dcos, with dA/dcos = 1/2.
            let g = match kind {
                Pair::Positive => {
                    loss += (1.0 - a).powi(2);
                    -(1.0 - a)
                }
                _ => {
                    loss += a * a;
                    a
                }
            } * inv_b;
            for k in 0..u[i].len() {
                du[i][k] += g * u[j][k];
                du[j][k] += g * u[i][k];
            }
        }
    }
    // Through the normalization: dr = (du − (du·u) u) / ‖r‖.
    let grads = (0..n)
        .map(|i| {
            let p = dot(&du[i], &u[i]);
            du[i]
                .iter()
                .zip(&u[i])
                .map(|(d, ui)| (d - p * ui) / norms[i])
                .collect()
        })
        .collect();
    Ok((loss * inv_b, grads))
}
