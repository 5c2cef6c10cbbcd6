//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 generators so that streams are stable
//! across platforms and crate versions. Independent consumers derived from
//! one seed use distinct ChaCha stream ids rather than re-seeding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used across the crate.
pub mod streams {
    pub const SCENARIO: u64 = 1;
    pub const CLUSTERING: u64 = 2;
    pub const NET_INIT: u64 = 3;
    pub const EXPLORATION: u64 = 4;
    pub const REPLAY: u64 = 5;
    pub const EVALUATION: u64 = 6;
}

pub fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seed for the `index`-th member of a family (episodes, sweep cells),
/// mixed so neighbouring indices give unrelated streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
