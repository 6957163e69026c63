//! Seed splitting.
//!
//! Every random draw in the toolkit comes from one 64-bit run seed. Each
//! consumer gets its own ChaCha stream (same key, distinct stream id), so
//! adding draws to one protocol never shifts the numbers another sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named consumers of randomness. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ValidationSplit = 1,
    WeightInit = 2,
    FewShot = 3,
    Corruption = 4,
    World = 5,
    EvaluationSplit = 6,
    Synthetic = 7,
}

/// Generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    substream_rng(seed, stream, 0)
}

/// Generator for the `index`-th independent substream of `stream`.
pub fn substream_rng(seed: u64, stream: Stream, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | u64::from(index));
    rng
}
