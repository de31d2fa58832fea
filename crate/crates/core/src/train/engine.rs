use crate::error::{Error, Result};
use crate::head::LossBreakdown;

use super::{balanced_batches, batch_objective, lr_at, AdamW, Dataset, Model, TermWeights, TrainConfig, TrainItem};

/// Parameters, optimizer moments and the step counter. All randomness is a
/// function of `(config.seed, epoch, sample)`, so the step counter is the
/// only RNG state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub config: TrainConfig,
    pub model: Model,
    pub opt: AdamW,
    pub step: u64,
    pub total_steps: u64,
}

impl TrainState {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let model = Model::new(cfg);
        Ok(Self {
            config: cfg.clone(),
            opt: AdamW::new(&model),
            model,
            step: 0,
            total_steps: 0,
        })
    }

    pub fn lr(&self) -> f64 {
        lr_at(self.step as usize, self.total_steps.max(1) as usize, &self.config)
    }
}

/// Forward, backward and one AdamW update on a balanced batch.
pub fn train_step(state: &mut TrainState, batch: &[TrainItem]) -> Result<LossBreakdown> {
    let w = TermWeights::total(&state.config);
    let (loss, grad) = batch_objective(&state.model, batch, &state.config, w, state.step, true)?;
    let lr = state.lr();
    let cfg = state.config.clone();
    state.opt.step(&mut state.model, &grad.expect("gradient requested"), lr, &cfg);
    if !state.model.is_finite() {
        return Err(Error::NonFiniteLoss {
            term: "parameters",
            step: state.step,
        });
    }
    state.step += 1;
    Ok(loss)
}

pub fn steps_per_epoch(data: &Dataset, cfg: &TrainConfig) -> Result<usize> {
    Ok(balanced_batches(&data.labels(), cfg.batch_size, cfg.seed, 0)?.len())
}

pub fn fit(data: &Dataset, cfg: &TrainConfig) -> Result<(TrainState, Vec<LossBreakdown>)> {
    fit_with(data, cfg, |_, _| Ok(()))
}

/// [`fit`] with a hook after every step, e.g. for checkpoint cadence.
pub fn fit_with(
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&TrainState, &LossBreakdown) -> Result<()>,
) -> Result<(TrainState, Vec<LossBreakdown>)> {
    let mut state = TrainState::new(cfg)?;
    if cfg.epochs == 0 {
        return Ok((state, Vec::new()));
    }
    check_input_mode(data, cfg)?;
    let labels = data.labels();
    state.total_steps = (steps_per_epoch(data, cfg)? * cfg.epochs) as u64;
    let mut history = Vec::with_capacity(state.total_steps as usize);
    for epoch in 0..cfg.epochs as u64 {
        for batch in balanced_batches(&labels, cfg.batch_size, cfg.seed, epoch)? {
            let items = data.items(&batch, cfg, epoch)?;
            let loss = train_step(&mut state, &items)?;
            on_step(&state, &loss)?;
            history.push(loss);
        }
    }
    Ok((state, history))
}

fn check_input_mode(data: &Dataset, cfg: &TrainConfig) -> Result<()> {
    use super::InputMode;
    match (data, cfg.input) {
        (Dataset::Raw(_), InputMode::Raw) | (Dataset::Features(_), InputMode::Features) => Ok(()),
        (Dataset::Raw(_), InputMode::Features) => Err(Error::InvalidConfig(
            "input=features but the dataset holds raw samples".into(),
        )),
        (Dataset::Features(_), InputMode::Raw) => Err(Error::InvalidConfig(
            "input=raw but the dataset holds precomputed features".into(),
        )),
    }
}

/// Names of trainable arrays whose gradient is identically zero over one
/// epoch of `data` at the initial parameters.
pub fn zero_gradient_arrays(data: &Dataset, cfg: &TrainConfig) -> Result<Vec<String>> {
    let state = TrainState::new(cfg)?;
    check_input_mode(data, cfg)?;
    let w = TermWeights::total(cfg);
    let mut acc = state.model.zeros_like();
    for (step, batch) in balanced_batches(&data.labels(), cfg.batch_size, cfg.seed, 0)?
        .into_iter()
        .enumerate()
    {
        let items = data.items(&batch, cfg, 0)?;
        let (_, g) = batch_objective(&state.model, &items, cfg, w, step as u64, true)?;
        for ((_, a), (_, b)) in acc.tensors_mut().into_iter().zip(g.expect("requested").tensors()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y.abs();
            }
        }
    }
    Ok(acc
        .tensors()
        .into_iter()
        .filter(|(_, t)| t.data.iter().all(|&v| v == 0.0))
        .map(|(n, _)| n)
        .collect())
}
