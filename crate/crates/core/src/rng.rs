//! Seed expansion.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by the
//! global seed and selected by a fixed 64-bit stream id. Streams are
//! independent of each other, so drawing from one never shifts another and
//! adding parallelism cannot reorder random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used across the crate. Sub-streams (per epoch, per fold, per
/// restart) are derived with [`substream`].
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const KFOLD: u64 = 4;
    pub const KMEANS: u64 = 5;
    pub const SYNTH: u64 = 6;
    pub const CLASSIFY: u64 = 7;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Combine a base stream id with an index (epoch, fold, restart).
pub fn substream(stream: u64, index: u64) -> u64 {
    (stream << 32) ^ index.wrapping_add(1)
}
