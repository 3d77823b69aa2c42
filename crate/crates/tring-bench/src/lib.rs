//! Deterministic fixtures for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tring::ring::random_tr;
use tring::sampling::{observe, sample_uniform, NoiseModel, ObservationSet};
use tring::tensor::DenseTensor;

/// Cubical `side^order` tensor reconstructed from a random uniform-rank
/// ring, reproducible from the seed.
pub fn ring_tensor(side: usize, order: usize, rank: usize, seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_tr(&mut rng, &vec![side; order], &vec![rank; order])
        .unwrap()
        .reconstruct()
        .unwrap()
}

/// Noisy observations of a `ratio` fraction of the entries of `truth`,
/// sampled without replacement, gaussian noise at level `c`.
pub fn observations(truth: &DenseTensor, ratio: f64, c: f64, seed: u64) -> ObservationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ((ratio * truth.numel() as f64).round() as usize).clamp(1, truth.numel());
    let linear = sample_uniform(&mut rng, truth.dims(), n, false).unwrap();
    let noise = NoiseModel::gaussian_level(c, truth).unwrap();
    observe(truth, &linear, &noise, &mut rng).unwrap()
}
