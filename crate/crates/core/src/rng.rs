//! Seed derivation. Every random stream in the crate comes from a
//! `ChaCha8Rng` seeded by mixing a base seed with task coordinates, so
//! parallel and serial execution draw identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// Stream tags so different consumers of one seed never collide.
pub mod stream {
    pub const ACTIVITY: u64 = 1;
    pub const SUBJECT: u64 = 2;
    pub const TRIAL: u64 = 3;
    pub const FOLDS: u64 = 4;
    pub const SUBSAMPLE: u64 = 5;
    pub const INIT: u64 = 6;
    pub const SHUFFLE: u64 = 7;
    pub const BOOTSTRAP: u64 = 8;
    pub const METHOD: u64 = 9;
}
