//! Benchmark fixtures.

use umcl_core::encoders::{synth_dataset, SynthSpec};
use umcl_core::train::{Dataset, TrainConfig, TrainItem};

/// A seeded random signal of length `k`.
pub fn signal(k: usize, seed: u64) -> Vec<f64> {
    use rand::Rng as _;
    let mut r = umcl_core::rng::stream(seed, &[]);
    (0..k).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// One balanced batch of `batch` raw training items.
pub fn batch(batch: usize) -> (TrainConfig, Vec<TrainItem>) {
    let cfg = TrainConfig {
        batch_size: batch,
        ..TrainConfig::default()
    };
    let half = batch / 2;
    let data = Dataset::Raw(synth_dataset(half, &SynthSpec::default(), 11).expect("valid spec"));
    let items = data.items(&(0..batch).collect::<Vec<_>>(), &cfg, 0).expect("items");
    (cfg, items)
}
