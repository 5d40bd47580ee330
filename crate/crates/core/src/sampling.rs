//! Reproducible random streams.
//!
//! Each sample index gets its own ChaCha stream derived from `(seed, index)`,
//! so a sample's values do not depend on which worker draws it or in what
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for sample `index` of the run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Derives an independent seed for a named sub-run.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.rotate_left(17));
    rng.set_stream(salt);
    rng.random()
}
