//! Derived RNG streams.
//!
//! Every independent unit of randomness (a simulated day, a sweep cell, a
//! bootstrap replicate) gets its own ChaCha8 stream seeded from the parent
//! seed and the unit's index, so results never depend on evaluation order
//! or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `index` under `parent`: `parent ^ mix(index)`.
pub fn derive(parent: u64, index: u64) -> u64 {
    parent ^ mix64(index)
}

pub fn stream(parent: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parent, index))
}
