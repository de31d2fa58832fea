use criterion::{black_box, criterion_group, criterion_main, Criterion};

use umcl_bench::{batch, signal};
use umcl_core::alignment::{affinity, asa_with_grad, BlockIndex};
use umcl_core::encoders::Modality;
use umcl_core::signal::{npc_with_grad, power_spectral_density, Guard, SpectralConfig};
use umcl_core::train::{batch_objective, Model, TermWeights};

fn kernels(c: &mut Criterion) {
    let x = signal(320, 1);
    let y = signal(320, 2);
    c.bench_function("npc_grad_320", |b| {
        b.iter(|| npc_with_grad(black_box(&x), black_box(&y), Guard::Lenient))
    });
    let cfg = SpectralConfig::default();
    c.bench_function("psd_320", |b| b.iter(|| power_spectral_density(black_box(&x), &cfg)));

    let rows: Vec<Vec<f64>> = (0..24).map(|i| signal(320, 10 + i)).collect();
    let idx = BlockIndex {
        batch: 8,
        modalities: Modality::ALL.to_vec(),
    };
    c.bench_function("affinity_24x320", |b| b.iter(|| affinity(black_box(&rows))));
    c.bench_function("asa_grad_24x320", |b| b.iter(|| asa_with_grad(black_box(&rows), &idx)));
}

fn training(c: &mut Criterion) {
    let (cfg, items) = batch(8);
    let model = Model::new(&cfg);
    let w = TermWeights::total(&cfg);
    let mut g = c.benchmark_group("objective");
    g.sample_size(20);
    g.bench_function("batch8_forward", |b| {
        b.iter(|| batch_objective(&model, black_box(&items), &cfg, w, 0, false))
    });
    g.bench_function("batch8_forward_backward", |b| {
        b.iter(|| batch_objective(&model, black_box(&items), &cfg, w, 0, true))
    });
    g.finish();
}

criterion_group!(benches, kernels, training);
criterion_main!(benches);
