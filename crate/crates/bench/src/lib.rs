//! Shared data generators for the criterion benchmarks.

use carapace_core::ingest::{generate_synthetic_dataset, AudioSegment, SynthSpec};
use carapace_core::matrix::Mat;
use carapace_core::util::seeded_rng;
use rand::Rng;

/// Labeled synthetic segments at the default desk profile.
pub fn segments(n_per_class: usize, seed: u64) -> Vec<AudioSegment> {
    generate_synthetic_dataset(&SynthSpec::default_desk(), n_per_class, seed)
        .expect("default synthetic spec is valid")
}

/// Random feature matrix with two separable blobs.
pub fn blobs(n: usize, d: usize, seed: u64) -> (Mat, Vec<usize>) {
    let mut rng = seeded_rng(seed, 0);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let cls = i % 2;
        let center = if cls == 1 { 1.5 } else { -1.5 };
        rows.push(
            (0..d)
                .map(|j| if j == 0 { center } else { 0.0 } + rng.random_range(-1.0..1.0))
                .collect::<Vec<f64>>(),
        );
        y.push(cls);
    }
    (Mat::from_rows(&rows), y)
}
