//! Shared inputs for the criterion benches.

use harbench::data::generate_synthetic;
use harbench::{Dataset, SyntheticSpec};

/// The standard fixture: 6 subjects, 4 activities, 4 trials per pair.
pub fn fixture() -> Dataset {
    generate_synthetic(&SyntheticSpec::default(), 42).expect("default spec is valid")
}

/// Deterministic pseudo-random values in [-1, 1).
pub fn signal(len: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}
