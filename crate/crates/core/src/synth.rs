//! Synthetic score/label fixtures with a known correctness posterior.

use rand::Rng;

use crate::error::Result;
use crate::mapper::sigmoid;
use crate::model::{LabeledDataset, ScoreRecord};
use crate::rng::{substream_rng, Stream};

/// `n` draws of `s ~ Uniform(lo, hi)` with `C ~ Bernoulli(posterior(s))`.
/// `stream` selects an independent substream under `seed`.
pub fn posterior_fixture(n: usize, seed: u64, stream: u32, lo: f64, hi: f64, posterior: impl Fn(f64) -> f64) -> Vec<(f64, bool)> {
    let mut rng = substream_rng(seed, Stream::Synthetic, stream);
    (0..n)
        .map(|_| {
            let s = rng.random_range(lo..hi);
            let c = rng.random::<f64>() < posterior(s);
            (s, c)
        })
        .collect()
}

/// The logistic posterior `P(C = 1 | s) = σ(2s − 1)`.
pub fn logistic_posterior(s: f64) -> f64 {
    sigmoid(2.0 * s - 1.0)
}

/// `s ~ Uniform(−2, 2)` labeled through [`logistic_posterior`].
pub fn logistic_fixture(n: usize, seed: u64, stream: u32) -> Vec<(f64, bool)> {
    posterior_fixture(n, seed, stream, -2.0, 2.0, logistic_posterior)
}

/// Two scores, each uniform on `[0, 1)`, with `C = 1` exactly when both
/// fall on the same side of ½. Each score alone says nothing about `C`.
pub fn xor_fixture(n: usize, seed: u64, stream: u32) -> Vec<([f64; 2], bool)> {
    let mut rng = substream_rng(seed, Stream::Synthetic, stream);
    (0..n)
        .map(|_| {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            ([a, b], (a >= 0.5) == (b >= 0.5))
        })
        .collect()
}

/// Wraps `(score, label)` pairs as a dataset with one score column.
pub fn to_dataset(pairs: &[(f64, bool)], score_name: &str, seed: u64) -> Result<LabeledDataset> {
    let records = pairs
        .iter()
        .enumerate()
        .map(|(i, (s, c))| ScoreRecord::new(i.to_string(), *c).with_score(score_name, *s))
        .collect();
    LabeledDataset::new(records, "synthetic", seed)
}
