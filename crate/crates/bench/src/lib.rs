//! Seeded input generators shared by the benchmarks.

use isorecal_core::OrderedDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Increasing trend plus uniform noise of half-width `noise`, unit weights.
pub fn trend(n: usize, noise: f64, seed: u64) -> OrderedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n)
        .map(|i| i as f64 / n as f64 + noise * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    OrderedDataset::from_ranked(&y, None).expect("finite responses")
}

/// Same as [`trend`] with weights drawn from (0, 2].
pub fn weighted_trend(n: usize, noise: f64, seed: u64) -> OrderedDataset {
    let base = trend(n, noise, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w: Vec<f64> = (0..n).map(|_| 2.0 - 2.0 * rng.random::<f64>()).collect();
    let y: Vec<f64> = base.responses().collect();
    OrderedDataset::from_ranked(&y, Some(&w)).expect("positive weights")
}
