//! Reproducible standard-normal draws.
//!
//! Every draw is addressed by `(seed, index)`: the index selects an
//! independent ChaCha stream, so sample `i` is the same no matter which
//! worker produces it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard-normal vector of length `dim` for sample `index`.
pub fn normal_vector(seed: u64, index: u64, dim: usize) -> Vec<f64> {
    let mut rng = stream(seed, index);
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// `count` consecutive standard-normal vectors from a single stream.
pub fn normal_vectors(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect()).collect()
}
