//! Deterministic seeding helpers.
//!
//! Every random decision in the pipeline flows through a `ChaCha8Rng` seeded
//! from a user seed mixed with a stream label (and, where appropriate, a
//! content hash), so independent stages never share a stream and runs with
//! the same inputs and seed are bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes two words into one with a splitmix64-style finalizer.
pub fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a hash of a byte string.
pub fn hash64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A ChaCha8 generator for `seed` on the stream named by `label`,
/// optionally salted with extra words (e.g. an epoch or a content hash).
pub fn stream(seed: u64, label: &str, salt: &[u64]) -> ChaCha8Rng {
    let mut s = mix64(seed, hash64(label.as_bytes()));
    for &w in salt {
        s = mix64(s, w);
    }
    ChaCha8Rng::seed_from_u64(s)
}
