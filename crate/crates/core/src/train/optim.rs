use crate::tensor::Tensor;

use super::{Model, TrainConfig};

/// Adam with decoupled weight decay. Moments are kept per named tensor in the
/// model's fixed tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl AdamW {
    pub fn new(model: &Model) -> Self {
        let zeros: Vec<Tensor> = model.tensors().iter().map(|(_, t)| t.zeros_like()).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step(&mut self, model: &mut Model, grad: &Model, lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let decay = 1.0 - lr * cfg.weight_decay;
        let grads = grad.tensors();
        for (i, (_, p)) in model.tensors_mut().into_iter().enumerate() {
            let g = grads[i].1;
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m.data[k] = b1 * m.data[k] + (1.0 - b1) * gk;
                v.data[k] = b2 * v.data[k] + (1.0 - b2) * gk * gk;
                let mh = m.data[k] / c1;
                let vh = v.data[k] / c2;
                p.data[k] = p.data[k] * decay - lr * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
}
