//! Dense row-major arrays and the affine layer shared by encoders,
//! projections and the classifier.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn randn(shape: &[usize], std: f64, rng: &mut Rng) -> Self {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Affine map `y = x·W + b` with `W` stored as `[in, out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Tensor,
    pub b: Option<Tensor>,
}

impl Dense {
    pub fn new(in_dim: usize, out_dim: usize, bias: bool, rng: &mut Rng) -> Self {
        let std = 1.0 / (in_dim as f64).sqrt();
        Self {
            w: Tensor::randn(&[in_dim, out_dim], std, rng),
            b: bias.then(|| Tensor::zeros(&[out_dim])),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.shape[0]
    }

    pub fn out_dim(&self) -> usize {
        self.w.shape[1]
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w: self.w.zeros_like(),
            b: self.b.as_ref().map(Tensor::zeros_like),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim());
        let mut y = match &self.b {
            Some(b) => b.data.clone(),
            None => vec![0.0; self.out_dim()],
        };
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (yj, wij) in y.iter_mut().zip(self.w.row(i)) {
                *yj += xi * wij;
            }
        }
        y
    }

    pub fn try_forward(&self, x: &[f64], what: &'static str) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::DimMismatch {
                what,
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        Ok(self.forward(x))
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        if let Some(gb) = grad.b.as_mut() {
            for (g, d) in gb.data.iter_mut().zip(dy) {
                *g += d;
            }
        }
        let mut dx = vec![0.0; x.len()];
        for (i, &xi) in x.iter().enumerate() {
            let grow = grad.w.row_mut(i);
            for (g, d) in grow.iter_mut().zip(dy) {
                *g += xi * d;
            }
            dx[i] = self.w.row(i).iter().zip(dy).map(|(w, d)| w * d).sum();
        }
        dx
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        let mut v = vec![("w", &self.w)];
        if let Some(b) = &self.b {
            v.push(("b", b));
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let mut v = vec![("w", &mut self.w)];
        if let Some(b) = &mut self.b {
            v.push(("b", b));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn dense_forward_backward_match_finite_differences() {
        let mut rng = stream(3, &[]);
        let mut d = Dense::new(4, 3, true, &mut rng);
        d.b.as_mut().unwrap().data = vec![0.1, -0.2, 0.3];
        let x = [0.5, -1.0, 2.0, 0.25];
        let dy = [1.0, -2.0, 0.5];
        let loss = |d: &Dense, x: &[f64]| -> f64 {
            d.forward(x).iter().zip(&dy).map(|(a, b)| a * b).sum()
        };
        let mut g = d.zeros_like();
        let dx = d.backward(&x, &dy, &mut g);
        let h = 1e-6;
        for i in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let n = (loss(&d, &xp) - loss(&d, &xm)) / (2.0 * h);
            assert!((n - dx[i]).abs() < 1e-8);
        }
        for k in 0..d.w.len() {
            let mut dp = d.clone();
            dp.w.data[k] += h;
            let mut dm = d.clone();
            dm.w.data[k] -= h;
            let n = (loss(&dp, &x) - loss(&dm, &x)) / (2.0 * h);
            assert!((n - g.w.data[k]).abs() < 1e-8);
        }
        assert_eq!(g.b.unwrap().data, dy.to_vec());
    }

    #[test]
    fn from_vec_checks_shape() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
    }
}
