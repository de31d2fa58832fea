//! Central finite-difference checks of analytic gradients.

use rand::Rng as _;

use crate::encoders::{synth_dataset, SynthSpec};
use crate::error::Result;
use crate::head::LossBreakdown;
use crate::rng;

use super::{batch_objective, Dataset, Model, TermWeights, TrainConfig, TrainItem};

/// Denominator floor of the relative error, so coordinates whose true
/// gradient is zero are judged on absolute error instead.
pub const REL_ERR_FLOOR: f64 = 1e-6;

pub const DEFAULT_STEP: f64 = 1e-5;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Label and index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Coordinates dropped because the loss is not differentiable there.
    pub skipped: usize,
}

impl GradCheckReport {
    fn record(&mut self, label: &str, idx: usize, e: f64) {
        self.checked += 1;
        if e > self.max_rel_err || self.worst.is_none() {
            self.max_rel_err = e.max(self.max_rel_err);
            self.worst = Some((label.to_string(), idx));
        }
    }

    fn empty() -> Self {
        Self {
            max_rel_err: 0.0,
            worst: None,
            checked: 0,
            skipped: 0,
        }
    }
}

/// Compares `analytic[i]` with `(f(p + h e_i) − f(p − h e_i)) / 2h` for each
/// `i` in `coords`.
pub fn grad_check(f: impl Fn(&[f64]) -> f64, analytic: &[f64], params: &[f64], step: f64, coords: &[usize]) -> GradCheckReport {
    let mut report = GradCheckReport::empty();
    let mut p = params.to_vec();
    for &i in coords {
        let orig = p[i];
        p[i] = orig + step;
        let up = f(&p);
        p[i] = orig - step;
        let down = f(&p);
        p[i] = orig;
        report.record("param", i, rel_err(analytic[i], (up - down) / (2.0 * step)));
    }
    report
}

fn term_diff(w: &TermWeights, up: &LossBreakdown, down: &LossBreakdown) -> f64 {
    // Differencing term by term keeps the large, flat heart-rate term from
    // adding rounding noise to the smooth ones.
    w.bce * (up.bce - down.bce)
        + w.hr * (up.hr - down.hr)
        + w.pull * (up.pull - down.pull)
        + w.push * (up.push - down.push)
        + w.aff * (up.aff - down.aff)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub n_coords: usize,
    pub step: f64,
    pub seed: u64,
    /// Multiplies the analytic gradient. Anything but 1 is a deliberately
    /// broken gradient for testing the harness.
    pub analytic_scale: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            n_coords: 200,
            step: DEFAULT_STEP,
            seed: 0,
            analytic_scale: 1.0,
        }
    }
}

/// Finite-difference check of `w`-weighted batch objective gradients over
/// `n_coords` parameter coordinates, spread round-robin over every tensor.
///
/// The heart-rate term is an argmax and therefore piecewise constant; a
/// coordinate whose perturbation moves a spectral peak to another bin sits
/// on a discontinuity and is skipped and replaced.
pub fn model_grad_check(
    model: &Model,
    items: &[TrainItem],
    cfg: &TrainConfig,
    w: TermWeights,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let GradCheckOptions {
        n_coords,
        step,
        seed,
        analytic_scale,
    } = *opts;
    let (_, grad) = batch_objective(model, items, cfg, w, 0, true)?;
    let grad = grad.expect("requested");
    let analytic: Vec<(String, Vec<f64>)> = grad.tensors().into_iter().map(|(n, t)| (n, t.data.clone())).collect();
    let sizes: Vec<usize> = analytic.iter().map(|(_, d)| d.len()).collect();
    let mut r = rng::stream(seed, &[rng::tag("grad_check")]);
    let mut work = model.clone();
    let mut report = GradCheckReport::empty();
    let mut attempts = 0;
    while report.checked < n_coords && attempts < 4 * n_coords + 16 {
        let ti = attempts % sizes.len();
        attempts += 1;
        let idx = r.gen_range(0..sizes[ti]);
        let orig = work.tensors()[ti].1.data[idx];
        let eval = |v: f64, work: &mut Model| -> Result<LossBreakdown> {
            work.tensors_mut()[ti].1.data[idx] = v;
            Ok(batch_objective(work, items, cfg, w, 0, false)?.0)
        };
        let up = eval(orig + step, &mut work)?;
        let down = eval(orig - step, &mut work)?;
        work.tensors_mut()[ti].1.data[idx] = orig;
        if w.hr != 0.0 && up.hr != down.hr {
            report.skipped += 1;
            continue;
        }
        let numeric = term_diff(&w, &up, &down) / (2.0 * step);
        report.record(&analytic[ti].0, idx, rel_err(analytic_scale * analytic[ti].1[idx], numeric));
    }
    Ok(report)
}

/// Names of the individually checked terms, then the weighted total.
pub const CHECKED_TERMS: [&str; 6] = ["bce", "pull", "push", "hr", "aff", "total"];

/// Checks every loss term and the weighted total.
pub fn term_suite(
    model: &Model,
    items: &[TrainItem],
    cfg: &TrainConfig,
    opts: &GradCheckOptions,
) -> Result<Vec<(&'static str, GradCheckReport)>> {
    CHECKED_TERMS
        .iter()
        .map(|&term| {
            let w = TermWeights::only(term).unwrap_or_else(|| TermWeights::total(cfg));
            Ok((term, model_grad_check(model, items, cfg, w, opts)?))
        })
        .collect()
}

/// Freshly initialised full model and one balanced batch of four raw
/// synthetic samples.
pub fn fixture(seed: u64) -> Result<(Model, Vec<TrainItem>, TrainConfig)> {
    let cfg = TrainConfig {
        seed,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let data = Dataset::Raw(synth_dataset(2, &SynthSpec::default(), rng::derive_seed(seed, &[rng::tag("grad_fixture")]))?);
    let items = data.items(&[0, 1, 2, 3], &cfg, 0)?;
    Ok((Model::new(&cfg), items, cfg))
}
