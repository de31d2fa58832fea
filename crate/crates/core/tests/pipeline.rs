use umcl_core::encoders::{read_features, synth_splits, write_features, PromptKind, TEncoder};
use umcl_core::eval::{
    evaluate, evaluate_all, ladder_conditions, robustness_conditions, scores, Degradation, EvalCondition,
    MetricsReport,
};
use umcl_core::train::gradcheck::fixture;
use umcl_core::train::{
    batch_objective, fit, load_checkpoint, save_checkpoint, term_suite, train_step, zero_gradient_arrays,
    AblationModel, CheckpointRecord, FeatureExtractor, GradCheckOptions, InputMode, TermWeights, TrainState,
};
use umcl_core::{Dataset, SynthSpec, TrainConfig};

fn small(n: usize, seed: u64) -> (Dataset, Dataset) {
    let (a, b) = synth_splits(n, n, &SynthSpec::default(), seed).unwrap();
    (Dataset::Raw(a), Dataset::Raw(b))
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_bit_reproducible() {
    let (train, _) = small(4, 3);
    let c = cfg(2);
    let (s1, h1) = fit(&train, &c).unwrap();
    let (s2, h2) = fit(&train, &c).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(s1, s2);
    assert_eq!(
        CheckpointRecord::from_state(&s1, "").to_bytes(),
        CheckpointRecord::from_state(&s2, "").to_bytes()
    );
    let (s3, _) = fit(&train, &TrainConfig { seed: 1, ..c }).unwrap();
    assert_ne!(s1.model, s3.model);
}

#[test]
fn checkpoint_round_trips_through_disk() {
    let (train, _) = small(4, 5);
    let (state, _) = fit(&train, &cfg(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&path, &state, "final_total=1.0\n").unwrap();
    let (back, metrics) = load_checkpoint(&path).unwrap();
    assert_eq!(back, state);
    assert_eq!(metrics, "final_total=1.0\n");
    let again = dir.path().join("m2.ckpt");
    save_checkpoint(&again, &back, &metrics).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn feature_files_round_trip() {
    let (train, _) = synth_splits(3, 1, &SynthSpec::default(), 8).unwrap();
    let records = FeatureExtractor::new(&TrainConfig::default(), 1).extract(&train).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.feat");
    write_features(&p, &records).unwrap();
    let back = read_features(&p).unwrap();
    assert_eq!(back, records);
    let q = dir.path().join("b.feat");
    write_features(&q, &back).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
}

#[test]
fn text_encoder_stays_frozen() {
    let before = TEncoder::shared().table().to_vec();
    let (train, _) = small(4, 2);
    let (state, _) = fit(&train, &cfg(1)).unwrap();
    assert_eq!(TEncoder::shared().table(), &before[..]);
    assert_eq!(TEncoder::pretrained().table(), &before[..]);
    assert!(state.model.tensors().iter().all(|(n, _)| !n.starts_with("t_enc")));
}

#[test]
fn identity_degradations_equal_clean() {
    let (train, test) = small(4, 4);
    let c = cfg(1);
    let (state, _) = fit(&train, &c).unwrap();
    let identity = EvalCondition::new(
        "identity",
        vec![
            Degradation::VideoDownsample(1),
            Degradation::LandmarkSigma(0.0),
            Degradation::FrameRatio(1.0),
            Degradation::PromptKind(PromptKind::Description),
        ],
    );
    let clean = scores(&state.model, &c, &test, &EvalCondition::clean()).unwrap();
    let same = scores(&state.model, &c, &test, &identity).unwrap();
    assert_eq!(clean, same);
    let a = evaluate(&state.model, &c, &test, &EvalCondition::clean()).unwrap();
    let b = evaluate(&state.model, &c, &test, &identity).unwrap();
    assert_eq!((a.auc, a.acc, a.n_samples), (b.auc, b.acc, b.n_samples));
}

#[test]
fn every_trainable_array_receives_gradient() {
    let (train, _) = small(8, 6);
    for m in AblationModel::ALL {
        let c = cfg(1).with_ablation(m);
        let dead = zero_gradient_arrays(&train, &c).unwrap();
        assert!(dead.is_empty(), "{m}: {dead:?}");
    }
}

#[test]
fn ablation_flags_zero_their_terms() {
    let (train, _) = small(4, 7);
    let (_, h) = fit(&train, &cfg(1).with_ablation(AblationModel::C)).unwrap();
    assert!(h.iter().all(|l| l.aff == 0.0 && l.phy > 0.0));
    let (_, h) = fit(&train, &cfg(1).with_ablation(AblationModel::A)).unwrap();
    assert!(h.iter().all(|l| l.aff == 0.0 && l.phy == 0.0 && l.total == l.bce));
    let (s, h) = fit(&train, &cfg(1).with_ablation(AblationModel::D)).unwrap();
    assert!(h.iter().all(|l| l.aff > 0.0 && l.phy > 0.0));
    assert!(h.iter().all(|l| (l.total - l.recomposed_total()).abs() < 1e-9));
    let head_in = |s: &TrainState| {
        s.model
            .tensors()
            .into_iter()
            .find(|(n, _)| n == "head.w")
            .map(|(_, t)| t.shape[0])
    };
    assert_eq!(head_in(&s), Some(960));
    let (a, _) = fit(&train, &cfg(1).with_ablation(AblationModel::A)).unwrap();
    assert_eq!(head_in(&a), Some(320));
}

#[test]
fn small_step_descends() {
    let (train, _) = small(4, 0);
    let c = TrainConfig {
        lr_init: 1e-4,
        lr_final: 1e-5,
        ..cfg(1)
    };
    let items = train.items(&[0, 1, 2, 3, 4, 5, 6, 7], &c, 0).unwrap();
    let w = TermWeights::total(&c);
    let mut state = TrainState::new(&c).unwrap();
    state.total_steps = 10;
    let (before, _) = batch_objective(&state.model, &items, &c, w, 0, false).unwrap();
    train_step(&mut state, &items).unwrap();
    let (after, _) = batch_objective(&state.model, &items, &c, w, 0, false).unwrap();
    assert!(after.total < before.total, "{} -> {}", before.total, after.total);
}

#[test]
fn bce_learns_below_chance() {
    let (train, _) = small(16, 1);
    let (_, h) = fit(&train, &cfg(30)).unwrap();
    let last_epoch = &h[h.len() - 4..];
    let mean = last_epoch.iter().map(|l| l.bce).sum::<f64>() / 4.0;
    assert!(mean < std::f64::consts::LN_2, "{mean}");
}

#[test]
fn reports_serialize_losslessly() {
    let (train, test) = small(4, 9);
    let c = cfg(1);
    let (state, _) = fit(&train, &c).unwrap();
    let mut conds = robustness_conditions();
    conds.extend(ladder_conditions());
    let report = MetricsReport::new(&c, evaluate_all(&state.model, &c, &test, &conds).unwrap());
    assert_eq!(report.rows.len(), 14);
    assert_eq!(MetricsReport::from_json(&report.to_json()).unwrap(), report);
    assert_eq!(MetricsReport::from_table(&report.to_table()).unwrap(), report);
    let rerun = MetricsReport::new(&c, evaluate_all(&state.model, &c, &test, &conds).unwrap());
    assert_eq!(rerun.to_json(), report.to_json());
}

#[test]
fn feature_mode_trains_and_scores() {
    let (train, test) = synth_splits(4, 4, &SynthSpec::default(), 10).unwrap();
    let ex = FeatureExtractor::new(&TrainConfig::default(), 3);
    let c = TrainConfig {
        input: InputMode::Features,
        ..cfg(2)
    };
    let tr = Dataset::from_records(&ex.extract(&train).unwrap(), c.feature_fps).unwrap();
    let te = Dataset::from_records(&ex.extract(&test).unwrap(), c.feature_fps).unwrap();
    let (state, h) = fit(&tr, &c).unwrap();
    assert!(h.iter().all(|l| l.total.is_finite()));
    let m = evaluate(&state.model, &c, &te, &EvalCondition::clean()).unwrap();
    assert_eq!(m.n_samples, 8);
    assert!(evaluate(&state.model, &c, &te, &ladder_conditions()[2]).is_err());
    assert!(fit(&train_raw(), &c).is_err());
}

fn train_raw() -> Dataset {
    small(4, 11).0
}

#[test]
fn gradient_suite_passes_on_fresh_model() {
    let (model, items, c) = fixture(1).unwrap();
    let opts = GradCheckOptions {
        n_coords: 30,
        seed: 1,
        ..GradCheckOptions::default()
    };
    for (term, r) in term_suite(&model, &items, &c, &opts).unwrap() {
        assert!(r.checked == 30 && r.max_rel_err < 1e-4, "{term}: {r:?}");
    }
}
