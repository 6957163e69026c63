//! Stratified index splits.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Splits `0..labels.len()` into `(kept, held_out)` so that each class sends
/// `round(fraction · count)` members to `held_out`, clamped to leave at
/// least one member of every class on both sides. Indices on each side are
/// returned in ascending order.
///
/// Fails with `split-degenerate` when a class has fewer than two members.
pub fn stratified_split<R: Rng>(labels: &[bool], fraction: f64, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::OutOfRange { what: "split fraction", value: fraction });
    }
    let mut kept = Vec::with_capacity(labels.len());
    let mut held = Vec::new();
    for class in [false, true] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::SplitDegenerate(format!(
                "class {} has {} record(s); each side of the split needs one",
                u8::from(class),
                members.len()
            )));
        }
        members.shuffle(rng);
        let n_held = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        held.extend_from_slice(&members[..n_held]);
        kept.extend_from_slice(&members[n_held..]);
    }
    kept.sort_unstable();
    held.sort_unstable();
    Ok((kept, held))
}
