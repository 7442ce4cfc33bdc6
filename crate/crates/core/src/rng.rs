//! Seed derivation.
//!
//! Every random stream is a ChaCha8 generator keyed by
//! `splitmix64(splitmix64(seed) ^ tag)`. Streams with different tags never
//! share state, so the learner, the graph generator and the Monte-Carlo oracle
//! can be seeded from one master seed without correlating.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_RUN: u64 = 0x52554e;
pub const TAG_GRAPH: u64 = 0x475241;
pub const TAG_INIT: u64 = 0x494e49;
pub const TAG_REWARDS: u64 = 0x524557;
pub const TAG_ORACLE: u64 = 0x4f5243;
pub const TAG_PROBE: u64 = 0x50524f;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}

pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

/// Stream indexed by a second counter (graph slot, run index, ...).
pub fn indexed_stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(derive_seed(seed, tag) ^ splitmix64(index)))
}
