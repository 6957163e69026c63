use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pair counts behind an empirical AUROC.
///
/// `wins` counts positive/negative pairs where the positive scores strictly
/// higher; `ties` counts pairs with equal scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AucCounts {
    pub wins: u64,
    pub ties: u64,
    pub positives: u64,
    pub negatives: u64,
}

impl AucCounts {
    /// `(wins + ties / 2) / (positives * negatives)`, computed as a single
    /// division of integers so equal counts always give bit-equal values.
    pub fn value<T: Scalar>(&self) -> T {
        let num = T::from_u64(2 * self.wins + self.ties).expect("count");
        let den = T::from_u64(2 * self.positives * self.negatives).expect("count");
        num / den
    }
}

/// Tie-aware pair counts in `O(n log n)`.
pub fn auroc_counts<T: Scalar>(pairs: &[(T, bool)]) -> Result<AucCounts> {
    if pairs.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::NonFinite("NaN score passed to auroc"));
    }
    let positives = pairs.iter().filter(|(_, l)| *l).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateClass { positives, negatives });
    }

    let mut sorted: Vec<(T, bool)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let (mut wins, mut ties, mut negatives_below) = (0u64, 0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        wins += pos * negatives_below;
        ties += pos * neg;
        negatives_below += neg;
        i = j;
    }
    Ok(AucCounts { wins, ties, positives: positives as u64, negatives: negatives as u64 })
}

/// Empirical AUROC with half credit for ties.
pub fn auroc<T: Scalar>(pairs: &[(T, bool)]) -> Result<T> {
    auroc_counts(pairs).map(|c| c.value())
}
