mod common;

use common::*;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use umcl_core::alignment::{affinity, asa_loss, asa_with_grad, BlockIndex};
use umcl_core::encoders::Modality;
use umcl_core::head::{bce_loss, bce_with_grad, classify, fuse, Prediction};
use umcl_core::rng;
use umcl_core::signal::*;
use umcl_core::tensor::Dense;
use umcl_core::train::{grad_check, rel_err};
use umcl_core::Label;

fn quad_of(q: &Quad) -> Quadruple<'_> {
    Quadruple {
        hq_real: &q[0],
        lq_real: &q[1],
        hq_fake: &q[2],
        lq_fake: &q[3],
    }
}

fn seed7_quad() -> Quad {
    random_quad(&mut common::rng(7), 64)
}

#[test]
fn npc_known_value() {
    let x = SignalVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let y = SignalVector::new(vec![1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((npc_loss(&x, &y).unwrap() - 0.2).abs() < 1e-12);
    assert!((npc(x.as_slice(), y.as_slice()) - 0.2).abs() < 1e-12);
}

#[test]
fn pull_push_phy_seed7_frozen() {
    let q = seed7_quad();
    let cfg = SpectralConfig::default();
    let (total, terms) = phy_loss(quad_of(&q), &cfg).unwrap();
    assert!(rel(cqsl_pull_loss(quad_of(&q)).unwrap(), 1.8700783199028579) < 1e-12);
    assert!(rel(cqsl_push_loss(quad_of(&q)).unwrap(), 0.3650884551751663) < 1e-12);
    assert_eq!(terms.hr, 56.25);
    assert!(rel(total, 58.48516677507803) < 1e-12);
    assert!(rel(total, pull(&q) + push(&q) + hr_loss(&q, 30.0, 0.7, 4.0)) < 1e-12);
}

#[test]
fn white_noise_psd_matches_direct_dft() {
    let mut r = common::rng(42);
    let x: Vec<f64> = (0..256).map(|_| StandardNormal.sample(&mut r)).collect();
    let psd = power_spectral_density(&x, &SpectralConfig::default()).unwrap();
    let oracle = dft_power(&x);
    assert_eq!(psd.len(), oracle.len());
    for ((_, p), o) in psd.iter().zip(&oracle) {
        assert!(rel(*p, *o) < 1e-9, "{p} vs {o}");
    }
}

#[test]
fn two_tone_mixture_picks_larger_peak() {
    let a = sinusoid(300, 30.0, 1.0, 1.0, 0.0);
    let b = sinusoid(300, 30.0, 2.0, 2.0, 0.0);
    let x: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
    let h = estimate_heart_rate(&x, &SpectralConfig::default()).unwrap();
    assert_eq!(h.bpm, 120.0);
    assert_eq!(hr_bpm(&x, 30.0, 0.7, 4.0), 120.0);
}

#[test]
fn asa_batch_of_three_frozen() {
    let mut r = common::rng(7);
    let rows: Vec<Vec<f64>> = (0..9).map(|_| uniform_vec(&mut r, 6)).collect();
    let idx = block_index(3, 3);
    let v = asa_loss(&affinity(&rows).unwrap(), &idx);
    assert!(rel(v, 2.6987077337764735) < 1e-12);
    assert!(rel(v, asa(&rows, 3, 3)) < 1e-12);
}

#[test]
fn bce_three_samples_frozen() {
    let mut r = common::rng(7);
    let logits: Vec<[f64; 2]> = (0..3)
        .map(|_| {
            let v = uniform_vec(&mut r, 2);
            [3.0 * v[0], 3.0 * v[1]]
        })
        .collect();
    let labels = [Label::Real, Label::Fake, Label::Real];
    let preds: Vec<Prediction> = logits.iter().map(|l| Prediction::from_logits(*l)).collect();
    let v = bce_loss(&preds, &labels).unwrap();
    assert!(rel(v, 1.0292260022760809) < 1e-12);
    assert!(rel(v, bce(&logits, &labels)) < 1e-12);
}

#[test]
fn softmax_matches_log_sum_exp() {
    let mut r = common::rng(11);
    for _ in 0..200 {
        let l = [r.gen_range(-30.0..30.0), r.gen_range(-30.0..30.0)];
        let p = Prediction::from_logits(l);
        let m = l[0].max(l[1]);
        let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
        for c in 0..2 {
            assert!((p.probabilities[c] - (l[c] - lse).exp()).abs() < 1e-12);
        }
    }
}

#[test]
fn classifier_matches_matrix_vector_product() {
    let mut r = rng::stream(3, &[]);
    let head = Dense::new(12, 2, true, &mut r);
    let mut head_b = head.clone();
    for (i, v) in head_b.b.as_mut().unwrap().data.iter_mut().enumerate() {
        *v = 0.3 * i as f64 - 0.1;
    }
    let x: Vec<f64> = (0..12).map(|_| r.gen_range(-1.0..1.0)).collect();
    let p = classify(&x, &head_b).unwrap();
    for j in 0..2 {
        let mut s = head_b.b.as_ref().unwrap().data[j];
        for (i, xi) in x.iter().enumerate() {
            s += xi * head_b.w.data[i * 2 + j];
        }
        assert!((p.logits[j] - s).abs() < 1e-9);
    }
    assert!(classify(&x[..11], &head).is_err());
}

#[test]
fn fuse_is_concatenation() {
    let mut r = common::rng(5);
    let z = uniform_vec(&mut r, 320);
    let e = uniform_vec(&mut r, 320);
    let t = uniform_vec(&mut r, 320);
    let u = fuse(Some(&z), Some(&e), Some(&t)).unwrap();
    assert_eq!(u.len(), 960);
    for i in 0..320 {
        assert_eq!(u[i], z[i]);
        assert_eq!(u[320 + i], e[i]);
        assert_eq!(u[640 + i], t[i]);
    }
    assert!(fuse(Some(&z), None, Some(&t)).is_err());
}

#[test]
fn affinity_matches_elementwise_oracle() {
    let mut r = common::rng(9);
    let rows: Vec<Vec<f64>> = (0..7).map(|_| uniform_vec(&mut r, 5)).collect();
    let a = affinity(&rows).unwrap();
    let o = common::affinity(&rows);
    for i in 0..7 {
        for j in 0..7 {
            assert!((a.get(i, j) - o[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn asa_gradient_matches_finite_differences() {
    let mut r = common::rng(21);
    let (b, m, d) = (3, 3, 5);
    let rows: Vec<Vec<f64>> = (0..b * m).map(|_| uniform_vec(&mut r, d)).collect();
    let idx = block_index(b, m);
    let (_, g) = asa_with_grad(&rows, &idx).unwrap();
    let flat: Vec<f64> = rows.concat();
    let analytic: Vec<f64> = g.concat();
    let f = |p: &[f64]| {
        let rs: Vec<Vec<f64>> = p.chunks(d).map(<[f64]>::to_vec).collect();
        asa_loss(&affinity(&rs).unwrap(), &idx)
    };
    let coords: Vec<usize> = (0..flat.len()).collect();
    let rep = grad_check(f, &analytic, &flat, 1e-5, &coords);
    assert!(rep.max_rel_err < 1e-4, "{rep:?}");
}

#[test]
fn cqsl_gradients_match_finite_differences() {
    let q = seed7_quad();
    let cfg = SpectralConfig::default();
    let w = PhyWeights {
        hr: 0.0,
        pull: 1.0,
        push: 1.0,
    };
    let (_, g) = phy_with_grad(quad_of(&q), &cfg, Guard::Lenient, w).unwrap();
    let flat = q.concat();
    let analytic = g.concat();
    let f = |p: &[f64]| {
        let parts: Quad = std::array::from_fn(|i| p[i * 64..(i + 1) * 64].to_vec());
        pull(&parts) + push(&parts)
    };
    let coords: Vec<usize> = (0..flat.len()).collect();
    let rep = grad_check(f, &analytic, &flat, 1e-5, &coords);
    assert!(rep.max_rel_err < 1e-4, "{rep:?}");
}

#[test]
fn bce_through_head_matches_finite_differences() {
    let mut r = rng::stream(4, &[]);
    let head = Dense::new(9, 2, true, &mut r);
    let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..9).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let labels = [Label::Real, Label::Fake, Label::Fake, Label::Real];
    let loss = |h: &Dense| {
        let preds: Vec<Prediction> = xs.iter().map(|x| classify(x, h).unwrap()).collect();
        bce_loss(&preds, &labels).unwrap()
    };
    let preds: Vec<Prediction> = xs.iter().map(|x| classify(x, &head).unwrap()).collect();
    let (_, dl) = bce_with_grad(&preds, &labels).unwrap();
    let mut grad = head.zeros_like();
    for (x, d) in xs.iter().zip(&dl) {
        head.backward(x, d, &mut grad);
    }
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..head.w.data.len() {
        let mut up = head.clone();
        up.w.data[i] += h;
        let mut down = head.clone();
        down.w.data[i] -= h;
        worst = worst.max(rel_err(grad.w.data[i], (loss(&up) - loss(&down)) / (2.0 * h)));
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn block_index_rows_are_sample_major() {
    let idx = BlockIndex {
        batch: 2,
        modalities: Modality::ALL.to_vec(),
    };
    assert_eq!(idx.row(1, 2), 5);
    assert_eq!(idx.locate(4), (1, 1));
}
