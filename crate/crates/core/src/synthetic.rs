//! Seeded synthetic datasets with known structure, for tests and demos.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::series::Dataset;

/// Number of classes produced by [`periodic_motifs`].
pub const MOTIF_CLASSES: usize = 3;

fn motif(class: usize, t: f64, phase: f64) -> f64 {
    match class {
        // Sine, period 20.
        0 => (2.0 * PI * t / 20.0 + phase).sin(),
        // Square wave, period 10.
        1 => {
            if (2.0 * PI * t / 10.0 + phase).sin() >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        // Sawtooth, period 32.
        _ => {
            let x = t / 32.0 + phase / (2.0 * PI);
            2.0 * (x - x.floor()) - 1.0
        }
    }
}

/// `count` series cycling through three classes of periodic motifs (sine,
/// square, sawtooth) with random phase, amplitude in `[0.8, 1.2]` and
/// additive Gaussian noise of standard deviation `noise`.
pub fn periodic_motifs(seed: u64, count: usize, len: usize, noise: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let rows: Vec<(usize, Vec<f64>)> = (0..count)
        .map(|i| {
            let class = i % MOTIF_CLASSES;
            let phase = rng.random_range(0.0..2.0 * PI);
            let amp = rng.random_range(0.8..1.2);
            let values = (0..len)
                .map(|t| amp * motif(class, t as f64, phase) + normal.sample(&mut rng))
                .collect();
            (class + 1, values)
        })
        .collect();
    Dataset::from_labeled(format!("motifs-{seed}"), rows).expect("non-empty")
}

/// Two classes of Gaussian noise; class "1" series additionally carry a
/// half-sine bump of `height` and `bump_len` samples at a random offset.
/// Returns the dataset and each series' bump start (`None` for class "0").
/// Classes alternate so that both appear from the first two series on.
pub fn bump_injection(
    seed: u64,
    per_class: usize,
    len: usize,
    bump_len: usize,
    height: f64,
    noise: f64,
) -> (Dataset, Vec<Option<usize>>) {
    assert!(bump_len <= len, "bump longer than series");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let mut rows = Vec::with_capacity(2 * per_class);
    let mut starts = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        for class in 0..2 {
            let mut values: Vec<f64> = (0..len).map(|_| normal.sample(&mut rng)).collect();
            if class == 1 {
                let start = rng.random_range(0..=len - bump_len);
                for j in 0..bump_len {
                    values[start + j] += height * (PI * (j as f64 + 0.5) / bump_len as f64).sin();
                }
                starts.push(Some(start));
            } else {
                starts.push(None);
            }
            rows.push((class, values));
        }
    }
    let data = Dataset::from_labeled(format!("bump-{seed}"), rows).expect("non-empty");
    (data, starts)
}

/// Fraction of `[bump, bump + bump_len)` covered by `[start, start + len)`.
pub fn overlap_fraction(start: usize, len: usize, bump: usize, bump_len: usize) -> f64 {
    let lo = start.max(bump);
    let hi = (start + len).min(bump + bump_len);
    hi.saturating_sub(lo) as f64 / bump_len as f64
}
