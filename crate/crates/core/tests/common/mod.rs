//! Brute-force reference implementations and random-instance generators
//! shared by the integration tests. Written independently of the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use umcl_core::alignment::BlockIndex;
use umcl_core::encoders::Modality;
use umcl_core::Label;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| r.gen_range(-1.0..1.0)).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `1 − r` with r the textbook two-pass Pearson coefficient.
pub fn npc(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    1.0 - sxy / (sxx.sqrt() * syy.sqrt())
}

pub fn mpc(x: &[f64], y: &[f64]) -> f64 {
    let mut d = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for i in 0..x.len() {
        d += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    d.abs() / (nx.sqrt() * ny.sqrt())
}

/// `[hq_real, lq_real, hq_fake, lq_fake]`.
pub type Quad = [Vec<f64>; 4];

pub fn random_quad(r: &mut ChaCha8Rng, k: usize) -> Quad {
    std::array::from_fn(|_| uniform_vec(r, k))
}

pub fn pull(q: &Quad) -> f64 {
    npc(&q[0], &q[1]) + npc(&q[2], &q[3])
}

pub fn push(q: &Quad) -> f64 {
    let mut s = 0.0;
    for real in [&q[0], &q[1]] {
        for fake in [&q[2], &q[3]] {
            s += mpc(real, fake);
        }
    }
    s
}

/// `|X_k|²` for `k = 0..=K/2` by direct summation.
pub fn dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, v) in x.iter().enumerate() {
                let a = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Beats per minute of the strongest in-band non-DC bin; first maximum wins.
pub fn hr_bpm(x: &[f64], fps: f64, lo: f64, hi: f64) -> f64 {
    let p = dft_power(x);
    let df = fps / x.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (k, &pk) in p.iter().enumerate().skip(1) {
        let f = k as f64 * df;
        if f >= lo && f <= hi && pk > best.0 {
            best = (pk, f);
        }
    }
    60.0 * best.1
}

pub fn hr_loss(q: &Quad, fps: f64, lo: f64, hi: f64) -> f64 {
    let h: Vec<f64> = q.iter().map(|x| hr_bpm(x, fps, lo, hi)).collect();
    (h[0] - h[1]).abs() + (h[2] - h[3]).abs()
}

pub fn phy(q: &Quad, fps: f64, lo: f64, hi: f64) -> f64 {
    hr_loss(q, fps, lo, hi) + pull(q) + push(q)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

pub fn affinity(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| rows.iter().map(|b| 0.5 * (1.0 + cosine(a, b))).collect())
        .collect()
}

/// Rows are ordered sample-major: row `b·m + j` is modality `j` of sample `b`.
/// Sums over ordered pairs and halves, so each unordered pair counts once.
pub fn asa(rows: &[Vec<f64>], batch: usize, m: usize) -> f64 {
    let a = affinity(rows);
    let mut s = 0.0;
    for i in 0..batch * m {
        for j in 0..batch * m {
            let (si, mi) = (i / m, i % m);
            let (sj, mj) = (j / m, j % m);
            if mi == mj {
                continue;
            }
            if si == sj {
                s += (1.0 - a[i][j]).powi(2);
            } else {
                s += a[i][j].powi(2);
            }
        }
    }
    s / 2.0 / batch as f64
}

pub fn block_index(batch: usize, m: usize) -> BlockIndex {
    BlockIndex {
        batch,
        modalities: Modality::ALL[..m].to_vec(),
    }
}

/// Mean cross-entropy of `softmax(logits)[1]` against `y ∈ {0, 1}`,
/// computed through log-sum-exp.
pub fn bce(logits: &[[f64; 2]], labels: &[Label]) -> f64 {
    let mut s = 0.0;
    for (l, y) in logits.iter().zip(labels) {
        let m = l[0].max(l[1]);
        let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
        let log_p = [l[0] - lse, l[1] - lse];
        s -= log_p[y.index()];
    }
    s / logits.len() as f64
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
