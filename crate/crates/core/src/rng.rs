//! Seeded random sources.
//!
//! Every Monte-Carlo trial owns a ChaCha8 stream derived from the master seed
//! and the trial index, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for the top-level (non-trial) work of a run.
pub fn master_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for trial `index` of a run seeded with `seed`.
///
/// The trial index selects the ChaCha stream; stream 0 is left to
/// [`master_rng`], so trial streams start at 1.
pub fn trial_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
