//! Deterministic seed derivation.
//!
//! Every stochastic task derives its RNG seed as a pure function of a base
//! seed and its task coordinates, so results cannot depend on how work is
//! partitioned across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a good 64-bit mixer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a list of task coordinates
/// (point index, trial index, repeat index, ...).
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    let mut state = mix64(base);
    for &c in coords {
        state = mix64(state ^ mix64(c.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    state
}

/// Seeded RNG used for all Monte Carlo draws in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
