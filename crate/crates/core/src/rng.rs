//! Seeded, splittable randomness.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! single experiment seed and a 64-bit stream id, so independent trials can
//! run in any order (or concurrently) and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Returns the generator for `stream` under the experiment `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child stream id from a parent id and a counter (SplitMix64 finalizer).
pub fn split(parent: u64, counter: u64) -> u64 {
    let mut z = parent.wrapping_add(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
