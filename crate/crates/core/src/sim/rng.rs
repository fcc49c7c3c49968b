//! Counter-based random streams.
//!
//! Shot `i` of an experiment seeded with `seed` always draws from the same
//! stream, so results do not depend on how shots are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ShotRng = ChaCha8Rng;

pub fn shot_rng(seed: u64, index: u64) -> ShotRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent child seed, used for runs, trials and repetitions.
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
