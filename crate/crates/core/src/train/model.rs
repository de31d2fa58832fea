//! Trainable parameters, the per-view forward/backward pass and the batch
//! objective that combines classification, CQSL and ASA.

use rayon::prelude::*;

use crate::alignment::{asa_with_grad, average_quality, build_joint_rows_from, ProjectionParams, D_SHARED};
use crate::encoders::{
    Label, LEncoder, LEncoderCache, LandmarkSequence, Modality, PEncoder, PEncoderCache, Z_DIM,
};
use crate::error::{Error, Result};
use crate::head::{bce_with_grad, classify, fuse_segments, LossBreakdown, Prediction};
use crate::rng;
use crate::signal::{phy_with_grad, Guard, PhyTerms, PhyWeights, Quadruple, SpectralConfig};
use crate::tensor::{Dense, Tensor};

use super::{InputMode, MissingPolicy, TrainConfig};

/// Every trainable array. The frozen text encoder lives outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub modalities: Vec<Modality>,
    pub p_enc: Option<PEncoder>,
    pub l_enc: Option<LEncoder>,
    pub proj: ProjectionParams,
    pub head: Dense,
}

impl Model {
    pub fn new(cfg: &TrainConfig) -> Self {
        let r = |what: &str| rng::stream(cfg.seed, &[rng::tag("init"), rng::tag(what)]);
        let raw = cfg.input == InputMode::Raw;
        let p_enc = (raw && cfg.has(Modality::P))
            .then(|| PEncoder::new(cfg.p_channels, cfg.p_kernel, cfg.p_gain, &mut r("p_enc")));
        let l_enc = (raw && cfg.has(Modality::L))
            .then(|| LEncoder::new(cfg.landmarks, cfg.l_hidden, &mut r("l_enc")));
        Self {
            modalities: cfg.modalities.clone(),
            p_enc,
            l_enc,
            proj: ProjectionParams::new(&cfg.modalities, &mut r("proj")),
            head: Dense::new(D_SHARED * cfg.modalities.len(), 2, cfg.head_bias, &mut r("head")),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            modalities: self.modalities.clone(),
            p_enc: self.p_enc.as_ref().map(PEncoder::zeros_like),
            l_enc: self.l_enc.as_ref().map(LEncoder::zeros_like),
            proj: ProjectionParams {
                rppg: self.proj.rppg.as_ref().map(Dense::zeros_like),
                face: self.proj.face.as_ref().map(Dense::zeros_like),
                text: self.proj.text.as_ref().map(Dense::zeros_like),
            },
            head: self.head.zeros_like(),
        }
    }

    /// Named arrays in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        if let Some(p) = &self.p_enc {
            out.extend(p.tensors().into_iter().map(|(n, t)| (format!("p_enc.{n}"), t)));
        }
        if let Some(l) = &self.l_enc {
            out.extend(l.tensors().into_iter().map(|(n, t)| (format!("l_enc.{n}"), t)));
        }
        for m in Modality::ALL {
            if let Some(d) = self.proj.get(m) {
                let pre = ProjectionParams::name(m);
                out.extend(d.tensors().into_iter().map(|(n, t)| (format!("proj.{pre}.{n}"), t)));
            }
        }
        out.extend(self.head.tensors().into_iter().map(|(n, t)| (format!("head.{n}"), t)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        if let Some(p) = &mut self.p_enc {
            out.extend(p.tensors_mut().into_iter().map(|(n, t)| (format!("p_enc.{n}"), t)));
        }
        if let Some(l) = &mut self.l_enc {
            out.extend(l.tensors_mut().into_iter().map(|(n, t)| (format!("l_enc.{n}"), t)));
        }
        let ProjectionParams { rppg, face, text } = &mut self.proj;
        for (m, d) in [(Modality::P, rppg), (Modality::L, face), (Modality::T, text)] {
            if let Some(d) = d {
                let pre = ProjectionParams::name(m);
                out.extend(d.tensors_mut().into_iter().map(|(n, t)| (format!("proj.{pre}.{n}"), t)));
            }
        }
        out.extend(self.head.tensors_mut().into_iter().map(|(n, t)| (format!("head.{n}"), t)));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Model) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }
}

/// rPPG input of one view.
#[derive(Debug, Clone, PartialEq)]
pub enum PInput {
    /// ROI intensity trace for the P-encoder.
    Trace(Vec<f64>),
    /// Precomputed `z`.
    Feature(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LInput {
    Landmarks(LandmarkSequence),
    /// Precomputed `e`.
    Feature(Vec<f64>),
}

/// One quality view of one sample. Absent modalities are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub p: Option<PInput>,
    pub l: Option<LInput>,
    /// Frozen text embedding `t`.
    pub t: Option<Vec<f64>>,
    /// Sampling rate of `z` for heart-rate estimation.
    pub z_fps: f64,
}

/// Forward state of one view, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ViewPass {
    pub z: Option<Vec<f64>>,
    p_cache: Option<PEncoderCache>,
    l_cache: Option<LEncoderCache>,
    /// Modality inputs to the projections, in model modality order.
    feats: Vec<Vec<f64>>,
    /// Projected 320-d features, in model modality order.
    pub projected: Vec<Vec<f64>>,
    fused: Vec<f64>,
    pub pred: Prediction,
    pub z_fps: f64,
}

impl Model {
    fn missing(&self, m: Modality, policy: MissingPolicy) -> Result<Vec<f64>> {
        match policy {
            MissingPolicy::Zero => Ok(vec![0.0; m.feature_dim()]),
            MissingPolicy::Error => Err(Error::MissingModality(ProjectionParams::name(m))),
        }
    }

    pub fn forward_view(&self, v: &View, policy: MissingPolicy) -> Result<ViewPass> {
        let mut pass = ViewPass {
            z: None,
            p_cache: None,
            l_cache: None,
            feats: Vec::with_capacity(self.modalities.len()),
            projected: Vec::with_capacity(self.modalities.len()),
            fused: Vec::new(),
            pred: Prediction::from_logits([0.0, 0.0]),
            z_fps: v.z_fps,
        };
        for &m in &self.modalities {
            let feat = match m {
                Modality::P => match (&v.p, &self.p_enc) {
                    (Some(PInput::Trace(trace)), Some(enc)) => {
                        let (z, cache) = enc.forward(trace)?;
                        pass.p_cache = Some(cache);
                        pass.z = Some(z.clone());
                        z
                    }
                    (Some(PInput::Trace(_)), None) => {
                        return Err(Error::InvalidConfig("raw rPPG input needs a P-encoder".into()))
                    }
                    (Some(PInput::Feature(z)), _) => {
                        pass.z = Some(z.clone());
                        z.clone()
                    }
                    (None, _) => self.missing(m, policy)?,
                },
                Modality::L => match (&v.l, &self.l_enc) {
                    (Some(LInput::Landmarks(seq)), Some(enc)) => {
                        let (e, cache) = enc.forward(seq)?;
                        pass.l_cache = Some(cache);
                        e
                    }
                    (Some(LInput::Landmarks(_)), None) => {
                        return Err(Error::InvalidConfig("raw landmark input needs an L-encoder".into()))
                    }
                    (Some(LInput::Feature(e)), _) => e.clone(),
                    (None, _) => self.missing(m, policy)?,
                },
                Modality::T => match &v.t {
                    Some(t) => t.clone(),
                    None => self.missing(m, policy)?,
                },
            };
            let layer = self.proj.get(m).expect("projection exists for every enabled modality");
            pass.projected.push(layer.try_forward(&feat, "projection input")?);
            pass.feats.push(feat);
        }
        let parts: Vec<&[f64]> = pass.projected.iter().map(Vec::as_slice).collect();
        pass.fused = fuse_segments(&parts);
        pass.pred = classify(&pass.fused, &self.head)?;
        Ok(pass)
    }

    pub fn predict(&self, v: &View, policy: MissingPolicy) -> Result<Prediction> {
        Ok(self.forward_view(v, policy)?.pred)
    }

    /// Gradients of one view given upstream gradients on its logits, on its
    /// projected features (`dproj`, model modality order) and on `z`.
    pub fn backward_view(&self, pass: &ViewPass, dlogits: [f64; 2], dproj: &[Vec<f64>], dz: Option<&[f64]>) -> Model {
        let mut g = self.zeros_like();
        let dfused = self.head.backward(&pass.fused, &dlogits, &mut g.head);
        for (slot, &m) in self.modalities.iter().enumerate() {
            let mut dy = dfused[slot * D_SHARED..(slot + 1) * D_SHARED].to_vec();
            if let Some(extra) = dproj.get(slot) {
                for (a, b) in dy.iter_mut().zip(extra) {
                    *a += b;
                }
            }
            let layer = self.proj.get(m).expect("enabled");
            let gl = g.proj.get_mut(m).expect("enabled");
            let dfeat = layer.backward(&pass.feats[slot], &dy, gl);
            match m {
                Modality::P => {
                    if let (Some(enc), Some(cache)) = (&self.p_enc, &pass.p_cache) {
                        let mut dzt = dfeat;
                        if let Some(extra) = dz {
                            for (a, b) in dzt.iter_mut().zip(extra) {
                                *a += b;
                            }
                        }
                        g.p_enc = Some(enc.backward(cache, &dzt));
                    }
                }
                Modality::L => {
                    if let (Some(enc), Some(cache)) = (&self.l_enc, &pass.l_cache) {
                        g.l_enc = Some(enc.backward(cache, &dfeat));
                    }
                }
                // Frozen.
                Modality::T => {}
            }
        }
        g
    }
}

/// Multipliers on each term inside the differentiated objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub bce: f64,
    pub hr: f64,
    pub pull: f64,
    pub push: f64,
    pub aff: f64,
}

impl TermWeights {
    /// `L_total` as configured.
    pub fn total(cfg: &TrainConfig) -> Self {
        Self {
            bce: 1.0,
            hr: cfg.alpha,
            pull: cfg.alpha,
            push: cfg.alpha,
            aff: cfg.beta,
        }
    }

    pub fn only(term: &str) -> Option<Self> {
        let mut w = Self {
            bce: 0.0,
            hr: 0.0,
            pull: 0.0,
            push: 0.0,
            aff: 0.0,
        };
        match term {
            "bce" => w.bce = 1.0,
            "hr" => w.hr = 1.0,
            "pull" => w.pull = 1.0,
            "push" => w.push = 1.0,
            "aff" => w.aff = 1.0,
            _ => return None,
        }
        Some(w)
    }

    pub fn apply(&self, b: &LossBreakdown) -> f64 {
        self.bce * b.bce + self.hr * b.hr + self.pull * b.pull + self.push * b.push + self.aff * b.aff
    }
}

/// HQ and LQ views of one training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainItem {
    pub hq: View,
    pub lq: View,
    pub label: Label,
}

/// Batch loss terms and, if requested, the gradient of `w.apply(terms)`.
pub fn batch_objective(
    model: &Model,
    items: &[TrainItem],
    cfg: &TrainConfig,
    w: TermWeights,
    step: u64,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<Model>)> {
    if items.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let b = items.len();
    let views: Vec<&View> = items.iter().map(|i| &i.hq).chain(items.iter().map(|i| &i.lq)).collect();
    let passes: Vec<ViewPass> = views
        .par_iter()
        .map(|v| model.forward_view(v, cfg.missing_modality))
        .collect::<Result<_>>()?;
    let labels: Vec<Label> = items.iter().chain(items).map(|i| i.label).collect();
    let preds: Vec<Prediction> = passes.iter().map(|p| p.pred).collect();
    let (bce, dlogits) = bce_with_grad(&preds, &labels)?;

    let mut dz: Vec<Option<Vec<f64>>> = vec![None; 2 * b];
    let mut phy = PhyTerms::default();
    if cfg.cqsl_active() {
        let reals: Vec<usize> = (0..b).filter(|&i| items[i].label == Label::Real).collect();
        let fakes: Vec<usize> = (0..b).filter(|&i| items[i].label == Label::Fake).collect();
        if reals.len() != fakes.len() {
            return Err(Error::ShapeMismatch(format!(
                "CQSL needs a balanced batch, got {} real and {} fake",
                reals.len(),
                fakes.len()
            )));
        }
        let n = reals.len() as f64;
        let pw = PhyWeights {
            hr: w.hr / n,
            pull: w.pull / n,
            push: w.push / n,
        };
        let z_of = |i: usize| -> Result<&[f64]> {
            passes[i]
                .z
                .as_deref()
                .ok_or(Error::MissingModality("rppg"))
        };
        for (&r, &f) in reals.iter().zip(&fakes) {
            let idx = [r, b + r, f, b + f];
            let q = Quadruple {
                hq_real: z_of(idx[0])?,
                lq_real: z_of(idx[1])?,
                hq_fake: z_of(idx[2])?,
                lq_fake: z_of(idx[3])?,
            };
            let scfg = SpectralConfig::with_fps(passes[r].z_fps)?;
            let (terms, grads) = phy_with_grad(q, &scfg, Guard::Lenient, pw)?;
            phy.hr += terms.hr / n;
            phy.pull += terms.pull / n;
            phy.push += terms.push / n;
            for (slot, g) in idx.iter().zip(grads) {
                match &mut dz[*slot] {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                    none => *none = Some(g),
                }
            }
        }
    }

    let m = model.modalities.len();
    let mut dproj: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 2 * b];
    let mut aff = 0.0;
    if cfg.asa_active() {
        let mut averaged = Vec::with_capacity(m);
        for slot in 0..m {
            let hq: Vec<Vec<f64>> = passes[..b].iter().map(|p| p.projected[slot].clone()).collect();
            let lq: Vec<Vec<f64>> = passes[b..].iter().map(|p| p.projected[slot].clone()).collect();
            averaged.push(average_quality(&hq, &lq)?);
        }
        let parts: Vec<(Modality, &[Vec<f64>])> = model
            .modalities
            .iter()
            .zip(&averaged)
            .map(|(&md, rows)| (md, rows.as_slice()))
            .collect();
        let (rows, index) = build_joint_rows_from(&parts)?;
        let (loss, grads) = asa_with_grad(&rows, &index)?;
        aff = loss;
        for (row, g) in grads.into_iter().enumerate() {
            let (sample, slot) = index.locate(row);
            let half: Vec<f64> = g.iter().map(|v| 0.5 * w.aff * v).collect();
            for pass in [sample, b + sample] {
                if dproj[pass].is_empty() {
                    dproj[pass] = vec![vec![0.0; D_SHARED]; m];
                }
                dproj[pass][slot] = half.clone();
            }
        }
    }

    let breakdown = LossBreakdown::compose(bce, phy.hr, phy.pull, phy.push, aff, cfg.alpha, cfg.beta)
        .map_err(|_| Error::NonFiniteLoss { term: "total", step })?;
    for (term, v) in [
        ("bce", breakdown.bce),
        ("hr", breakdown.hr),
        ("pull", breakdown.pull),
        ("push", breakdown.push),
        ("aff", breakdown.aff),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss { term, step });
        }
    }
    if !want_grad {
        return Ok((breakdown, None));
    }

    let per_view: Vec<Model> = (0..2 * b)
        .into_par_iter()
        .map(|i| {
            let dl = [w.bce * dlogits[i][0], w.bce * dlogits[i][1]];
            model.backward_view(&passes[i], dl, &dproj[i], dz[i].as_deref())
        })
        .collect();
    // Fixed-order reduction keeps results independent of the thread count.
    let mut grad = model.zeros_like();
    for g in &per_view {
        grad.add_assign(g);
    }
    if !grad.is_finite() {
        return Err(Error::NonFiniteLoss { term: "gradient", step });
    }
    Ok((breakdown, Some(grad)))
}

/// Sampling rate of the 320-point `z` for a clip of the given duration.
pub fn z_fps_for_duration(duration_s: f64) -> f64 {
    (Z_DIM - 1) as f64 / duration_s
}
