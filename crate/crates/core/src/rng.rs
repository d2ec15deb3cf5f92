//! Seeded RNG construction shared by every stochastic step.
//!
//! ChaCha8 is used everywhere so a seed reproduces the same stream on every
//! platform and across rand releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sub-task `index` of a seeded job (e.g. tree `index`
/// of a forest), stable regardless of the order the sub-tasks run in.
pub fn derived(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
