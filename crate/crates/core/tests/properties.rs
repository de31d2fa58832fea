mod common;

use proptest::collection::vec;
use proptest::prelude::*;

use umcl_core::alignment::{affinity, asa_loss};
use umcl_core::encoders::{downsample_video, frame_indices, sample_frames, Quality, VideoClip};
use umcl_core::eval::auc;
use umcl_core::head::{bce_loss, total_loss, LossBreakdown, Prediction};
use umcl_core::signal::*;
use umcl_core::Label;

fn npc(x: &[f64], y: &[f64]) -> f64 {
    npc_with_grad(x, y, Guard::Lenient).unwrap().0
}

fn mpc(x: &[f64], y: &[f64]) -> f64 {
    mpc_with_grad(x, y, Guard::Lenient).unwrap().0
}

fn spread(x: &[f64]) -> f64 {
    let m = common::mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>()
}

/// Equal-length pairs whose components are far from constant.
fn signal_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..64)
        .prop_flat_map(|k| (vec(-1.0f64..1.0, k), vec(-1.0f64..1.0, k)))
        .prop_filter("non-degenerate", |(x, y)| spread(x) > 1e-3 && spread(y) > 1e-3)
}

fn rows(n: std::ops::Range<usize>) -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (n, 1usize..6).prop_flat_map(|(b, d)| {
        (
            Just(b),
            vec(vec(-1.0f64..1.0, d), 3 * b).prop_filter("nonzero rows", |rs| {
                rs.iter().all(|r| r.iter().map(|v| v * v).sum::<f64>() > 1e-4)
            }),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn correlation_losses_are_bounded((x, y) in signal_pair()) {
        let n = npc(&x, &y);
        let m = mpc(&x, &y);
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&n));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
    }
}

proptest! {
    #[test]
    fn npc_self_and_reflection((x, _) in signal_pair(), c in -5.0f64..5.0) {
        prop_assert!(npc(&x, &x).abs() < 1e-9);
        let r: Vec<f64> = x.iter().map(|v| c - v).collect();
        prop_assert!((npc(&x, &r) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn npc_positive_affine_invariance((x, y) in signal_pair(), a in 0.1f64..10.0, b in -10.0f64..10.0) {
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((npc(&ax, &y) - npc(&x, &y)).abs() < 1e-9);
        prop_assert!((npc(&y, &ax) - npc(&y, &x)).abs() < 1e-9);
    }

    #[test]
    fn mpc_scale_invariance((x, y) in signal_pair(), a in 0.1f64..10.0, neg in any::<bool>()) {
        let s = if neg { -a } else { a };
        let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
        prop_assert!((mpc(&sx, &y) - mpc(&x, &y)).abs() < 1e-9);
    }

    #[test]
    fn losses_are_symmetric((x, y) in signal_pair()) {
        prop_assert!((npc(&x, &y) - npc(&y, &x)).abs() < 1e-12);
        prop_assert!((mpc(&x, &y) - mpc(&y, &x)).abs() < 1e-12);
    }

    #[test]
    fn on_bin_tones_are_exact(k in 64usize..400, bin_frac in 0.0f64..1.0, phase in 0.0f64..std::f64::consts::TAU) {
        let cfg = SpectralConfig::default();
        let df = cfg.bin_hz(k);
        let lo = (cfg.band_low_hz / df).ceil() as usize;
        let hi = (cfg.band_high_hz / df).floor() as usize;
        let bin = lo + ((hi - lo) as f64 * bin_frac) as usize;
        let x = sinusoid(k, cfg.fps, bin as f64 * df, 1.0, phase);
        let h = estimate_heart_rate(&x, &cfg).unwrap();
        prop_assert_eq!(h.bin_index, bin);
        prop_assert!((h.bpm - 60.0 * bin as f64 * df).abs() < 1e-9);
    }

    #[test]
    fn off_bin_tones_within_one_bin(k in 128usize..400, f in 1.0f64..3.5) {
        let cfg = SpectralConfig::default();
        let x = sinusoid(k, cfg.fps, f, 1.0, 0.3);
        let h = estimate_heart_rate(&x, &cfg).unwrap();
        prop_assert!((h.bpm / 60.0 - f).abs() <= cfg.bin_hz(k) + 1e-12);
    }

    #[test]
    fn psd_matches_direct_dft(x in (4usize..130).prop_flat_map(|k| vec(-1.0f64..1.0, k))) {
        let psd = power_spectral_density(&x, &SpectralConfig::default()).unwrap();
        let o = common::dft_power(&x);
        let scale = o.iter().cloned().fold(0.0, f64::max);
        for ((_, p), q) in psd.iter().zip(&o) {
            prop_assert!((p - q).abs() <= 1e-9 * scale.max(1e-300));
        }
    }

    #[test]
    fn affinity_structure((_, rs) in rows(1..5)) {
        let a = affinity(&rs).unwrap();
        for i in 0..a.n {
            prop_assert_eq!(a.get(i, i), 1.0);
            for j in 0..a.n {
                prop_assert!((a.get(i, j) - a.get(j, i)).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a.get(i, j)));
            }
        }
    }

    #[test]
    fn affinity_ignores_row_scale((_, rs) in rows(1..4), s in 0.01f64..100.0, pick in any::<prop::sample::Index>()) {
        let mut scaled = rs.clone();
        let i = pick.index(rs.len());
        scaled[i].iter_mut().for_each(|v| *v *= s);
        let (a, b) = (affinity(&rs).unwrap(), affinity(&scaled).unwrap());
        for (u, v) in a.scores.iter().zip(&b.scores) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn asa_ignores_sample_order((b, rs) in rows(1..5), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let idx = common::block_index(b, 3);
        let mut order: Vec<usize> = (0..b).collect();
        order.shuffle(&mut common::rng(perm_seed));
        let permuted: Vec<Vec<f64>> = order.iter().flat_map(|&s| rs[3 * s..3 * s + 3].to_vec()).collect();
        let l0 = asa_loss(&affinity(&rs).unwrap(), &idx);
        let l1 = asa_loss(&affinity(&permuted).unwrap(), &idx);
        prop_assert!((l0 - l1).abs() < 1e-12);
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_shift(l0 in -50.0f64..50.0, l1 in -50.0f64..50.0, c in -100.0f64..100.0) {
        let p = Prediction::from_logits([l0, l1]);
        let q = Prediction::from_logits([l0 + c, l1 + c]);
        prop_assert!((p.probabilities[0] + p.probabilities[1] - 1.0).abs() < 1e-9);
        prop_assert!((p.probabilities[1] - q.probabilities[1]).abs() < 1e-12);
        prop_assert!(p.probabilities.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn bce_is_nonnegative(ls in vec((-40.0f64..40.0, -40.0f64..40.0, any::<bool>()), 1..8)) {
        let preds: Vec<Prediction> = ls.iter().map(|&(a, b, _)| Prediction::from_logits([a, b])).collect();
        let labels: Vec<Label> = ls.iter().map(|&(_, _, r)| if r { Label::Real } else { Label::Fake }).collect();
        prop_assert!(bce_loss(&preds, &labels).unwrap() >= 0.0);
    }

    #[test]
    fn total_loss_is_linear(b in 0.0f64..5.0, p in 0.0f64..5.0, a in 0.0f64..5.0, al in 0.0f64..1.0, be in 0.0f64..1.0, d in 0.0f64..3.0) {
        let t0 = total_loss(b, p, a, al, be).unwrap();
        prop_assert!((total_loss(b, p + d, a, al, be).unwrap() - t0 - al * d).abs() < 1e-9);
        prop_assert!((total_loss(b, p, a + d, al, be).unwrap() - t0 - be * d).abs() < 1e-9);
        prop_assert!((total_loss(b + d, p, a, al, be).unwrap() - t0 - d).abs() < 1e-9);
    }

    #[test]
    fn breakdown_recomposes(v in vec(0.0f64..10.0, 5), al in 0.0f64..1.0, be in 0.0f64..1.0) {
        let l = LossBreakdown::compose(v[0], v[1], v[2], v[3], v[4], al, be).unwrap();
        prop_assert!((l.total - l.recomposed_total()).abs() < 1e-9);
        prop_assert!((l.phy - (v[1] + v[2] + v[3])).abs() < 1e-12);
    }

    #[test]
    fn auc_invariances(pts in vec((-5.0f64..5.0, any::<bool>()), 2..40)) {
        let labels: Vec<Label> = pts.iter().map(|&(_, r)| if r { Label::Real } else { Label::Fake }).collect();
        prop_assume!(labels.contains(&Label::Real) && labels.contains(&Label::Fake));
        let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let a = auc(&s, &labels).unwrap();
        let mono: Vec<f64> = s.iter().map(|v| (0.7 * v).exp() + 3.0).collect();
        prop_assert!((auc(&mono, &labels).unwrap() - a).abs() < 1e-12);
        let flipped: Vec<Label> = labels.iter().map(|l| l.flipped()).collect();
        prop_assert!((auc(&s, &flipped).unwrap() + a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn downsampling_composes(t in 1usize..4, c in 1usize..3, seed in any::<u64>()) {
        use rand::Rng as _;
        let mut r = common::rng(seed);
        let (h, w) = (8, 8);
        let frames: Vec<f64> = (0..t * h * w * c).map(|_| r.gen_range(0.0..1.0)).collect();
        let clip = VideoClip::new(frames, (t, h, w, c), 30.0, Quality::HQ, Label::Real).unwrap();
        let once = downsample_video(&clip, 4).unwrap();
        let twice = downsample_video(&downsample_video(&clip, 2).unwrap(), 2).unwrap();
        prop_assert_eq!((once.h, once.w), (twice.h, twice.w));
        for (a, b) in once.frames.iter().zip(&twice.frames) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert_eq!(once.label, clip.label);
    }

    #[test]
    fn frame_sampling_is_a_subsequence(t in 8usize..120, ratio in 0.05f64..1.0) {
        prop_assume!((ratio * t as f64).ceil() >= 2.0);
        let frames: Vec<f64> = (0..t).map(|i| i as f64).collect();
        let clip = VideoClip::new(frames, (t, 1, 1, 1), 30.0, Quality::HQ, Label::Fake).unwrap();
        let s = sample_frames(&clip, ratio).unwrap();
        prop_assert_eq!(s.frames.len(), frame_indices(t, ratio).unwrap().len());
        prop_assert!(s.frames.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.frames.iter().all(|v| clip.frames.contains(v)));
        prop_assert_eq!(s.label, Label::Fake);
        prop_assert!((s.duration_s() - clip.duration_s()).abs() < 1e-9);
    }
}

#[test]
fn mpc_is_not_shift_invariant() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1.0, -1.0, 1.0, -1.0];
    let shifted: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
    let (a, b) = (mpc(&x, &y), mpc(&shifted, &y));
    assert!((a - b).abs() > 1e-3, "{a} vs {b}");
    assert!((npc(&x, &y) - npc(&shifted, &y)).abs() < 1e-12);
}

#[test]
fn perfect_alignment_has_zero_asa() {
    // Two samples, each modality row identical within a sample and opposite
    // across samples.
    let r0 = vec![1.0, 0.0, 0.0];
    let r1 = vec![-1.0, 0.0, 0.0];
    let rs = vec![r0.clone(), r0.clone(), r0, r1.clone(), r1.clone(), r1];
    let idx = common::block_index(2, 3);
    assert!(asa_loss(&affinity(&rs).unwrap(), &idx).abs() < 1e-12);
    let single = vec![vec![0.3, -2.0]; 3];
    assert_eq!(asa_loss(&affinity(&single).unwrap(), &common::block_index(1, 3)), 0.0);
}
