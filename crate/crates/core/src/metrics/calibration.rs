use std::io::Write;

use serde::{Deserialize, Serialize};

use super::auroc::auroc;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BINS: usize = 10;

/// One equal-width confidence bin. `mean_confidence` and `accuracy` are
/// `None` for an empty bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin<T> {
    pub lo: T,
    pub hi: T,
    pub count: usize,
    pub mean_confidence: Option<T>,
    pub accuracy: Option<T>,
}

/// Reliability-diagram data plus the scalar summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport<T> {
    pub bins: Vec<ReliabilityBin<T>>,
    pub ece: T,
    pub auroc: T,
    pub n: usize,
}

/// Bin `k` covers `[k/M, (k+1)/M)`; the last bin is closed at 1.
///
/// The index is taken from `floor(p * M)` and then nudged so it agrees with
/// the edges `k / M` as they are computed in floating point.
pub fn bin_index<T: Scalar>(p: T, m_bins: usize) -> usize {
    let m = T::from_count(m_bins);
    let mut k = (p * m).floor().to_usize().unwrap_or(0).min(m_bins - 1);
    while k > 0 && p < T::from_count(k) / m {
        k -= 1;
    }
    while k + 1 < m_bins && p >= T::from_count(k + 1) / m {
        k += 1;
    }
    k
}

fn check_inputs<T: Scalar>(preds: &[T], labels: &[bool], m_bins: usize) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch { left: preds.len(), right: labels.len() });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput("calibration metrics need at least one prediction"));
    }
    if m_bins == 0 {
        return Err(Error::InvalidConfig("number of bins must be positive".into()));
    }
    for (index, p) in preds.iter().enumerate() {
        if !(*p >= T::zero() && *p <= T::one()) {
            return Err(Error::UnnormalizedPrediction { index, value: p.to_f64().unwrap_or(f64::NAN) });
        }
    }
    Ok(())
}

fn build_bins<T: Scalar>(preds: &[T], labels: &[bool], m_bins: usize) -> Vec<ReliabilityBin<T>> {
    let mut count = vec![0usize; m_bins];
    let mut correct = vec![0usize; m_bins];
    let mut conf_sum = vec![T::zero(); m_bins];
    for (&p, &l) in preds.iter().zip(labels) {
        let k = bin_index(p, m_bins);
        count[k] += 1;
        correct[k] += usize::from(l);
        conf_sum[k] = conf_sum[k] + p;
    }
    let m = T::from_count(m_bins);
    (0..m_bins)
        .map(|k| {
            let occupied = count[k] > 0;
            let c = T::from_count(count[k]);
            ReliabilityBin {
                lo: T::from_count(k) / m,
                hi: T::from_count(k + 1) / m,
                count: count[k],
                mean_confidence: occupied.then(|| conf_sum[k] / c),
                accuracy: occupied.then(|| T::from_count(correct[k]) / c),
            }
        })
        .collect()
}

fn weighted_gap<T: Scalar>(bins: &[ReliabilityBin<T>], n: usize) -> T {
    let n = T::from_count(n);
    bins.iter()
        .filter_map(|b| match (b.accuracy, b.mean_confidence) {
            (Some(acc), Some(conf)) => Some(T::from_count(b.count) / n * (acc - conf).abs()),
            _ => None,
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Expected calibration error over `m_bins` equal-width bins.
///
/// Predictions outside `[0, 1]` are rejected, never clamped.
pub fn ece<T: Scalar>(preds: &[T], labels: &[bool], m_bins: usize) -> Result<T> {
    check_inputs(preds, labels, m_bins)?;
    Ok(weighted_gap(&build_bins(preds, labels, m_bins), preds.len()))
}

/// Bins, ECE and AUROC for one set of predictions.
pub fn reliability_bins<T: Scalar>(preds: &[T], labels: &[bool], m_bins: usize) -> Result<ReliabilityReport<T>> {
    check_inputs(preds, labels, m_bins)?;
    let bins = build_bins(preds, labels, m_bins);
    let ece = weighted_gap(&bins, preds.len());
    let pairs: Vec<(T, bool)> = preds.iter().copied().zip(labels.iter().copied()).collect();
    let auroc = auroc(&pairs)?;
    Ok(ReliabilityReport { bins, ece, auroc, n: preds.len() })
}

impl<T: Scalar> ReliabilityReport<T> {
    /// ECE recomputed from the `bins` field alone.
    pub fn ece_from_bins(&self) -> T {
        weighted_gap(&self.bins, self.n)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Bin table with header `lo,hi,count,conf,acc`; empty bins leave conf
    /// and acc blank.
    pub fn write_bins_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(["lo", "hi", "count", "conf", "acc"]).map_err(csv_err)?;
        let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
        for b in &self.bins {
            w.write_record([
                b.lo.to_string(),
                b.hi.to_string(),
                b.count.to_string(),
                opt(b.mean_confidence),
                opt(b.accuracy),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Affine map of `values` onto `[0, 1]` by their own min and max. A constant
/// column maps to 0.5 everywhere.
pub fn min_max_normalize<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("cannot normalize an empty column"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("min-max normalization input"));
    }
    let lo = values.iter().copied().fold(T::infinity(), T::min);
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    if span <= T::zero() {
        return Ok(vec![T::half(); values.len()]);
    }
    Ok(values.iter().map(|&v| ((v - lo) / span).min(T::one()).max(T::zero())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_confidence_perfect_accuracy() {
        assert_eq!(ece(&[1.0; 6], &[true; 6], 10).unwrap(), 0.0);
    }

    #[test]
    fn overconfident_half_correct() {
        let labels = [true, false, true, false];
        assert_eq!(ece(&[1.0; 4], &labels, 10).unwrap(), 0.5);
    }

    #[test]
    fn calibrated_single_bin() {
        let labels: Vec<bool> = (0..20).map(|i| i < 13).collect();
        let e = ece(&[0.65f64; 20], &labels, 10).unwrap();
        assert!(e.abs() < 1e-15, "{e}");
    }

    #[test]
    fn two_extreme_bins() {
        let r = reliability_bins(&[0.05f64, 0.95], &[false, true], 10).unwrap();
        // ½·|0 − 0.05| + ½·|1 − 0.95|
        assert!((r.ece - 0.05).abs() < 1e-15);
        assert_eq!(r.auroc, 1.0);
        let occupied: Vec<usize> = r.bins.iter().enumerate().filter(|(_, b)| b.count > 0).map(|(i, _)| i).collect();
        assert_eq!(occupied, vec![0, 9]);
        assert_eq!(r.ece_from_bins(), r.ece);
        assert!(r.bins[3].accuracy.is_none());
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(ece(&[1.2], &[true], 10), Err(Error::UnnormalizedPrediction { index: 0, .. })));
        assert!(matches!(ece(&[-0.01, 0.5], &[true, false], 10), Err(Error::UnnormalizedPrediction { .. })));
        assert!(matches!(ece(&[f64::NAN], &[true], 10), Err(Error::UnnormalizedPrediction { .. })));
        assert!(matches!(ece(&[0.5], &[true, false], 10), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 1);
        assert_eq!(bin_index(0.7, 10), 7);
        assert_eq!(bin_index(0.0999999, 10), 0);
        assert_eq!(bin_index(1.0, 10), 9);
        for k in 0..=30 {
            let p = k as f64 / 30.0;
            let b = bin_index(p, 30);
            assert!(p >= b as f64 / 30.0);
        }
    }

    #[test]
    fn csv_layout() {
        let r = reliability_bins(&[0.05, 0.95], &[false, true], 2).unwrap();
        let mut buf = Vec::new();
        r.write_bins_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "lo,hi,count,conf,acc\n0,0.5,1,0.05,0\n0.5,1,1,0.95,1\n");
    }

    #[test]
    fn normalize() {
        assert_eq!(min_max_normalize(&[-2.0, 0.0, 2.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_normalize(&[3.0, 3.0]).unwrap(), vec![0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(
            data in prop::collection::vec(((0u32..=1000).prop_map(|v| v as f64 / 1000.0), any::<bool>()), 1..120),
            shift in 0usize..120,
        ) {
            let (p, l): (Vec<f64>, Vec<bool>) = data.iter().copied().unzip();
            let e = ece(&p, &l, 10).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
            let mut rotated = data.clone();
            rotated.rotate_left(shift % data.len());
            let (p2, l2): (Vec<f64>, Vec<bool>) = rotated.into_iter().unzip();
            prop_assert!((e - ece(&p2, &l2, 10).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn bins_partition_the_records(
            p in prop::collection::vec(0.0f64..=1.0, 1..100),
            m in 1usize..25,
        ) {
            let labels: Vec<bool> = p.iter().map(|v| *v > 0.3).collect();
            let bins = build_bins(&p, &labels, m);
            prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), p.len());
            for b in &bins {
                if let Some(c) = b.mean_confidence {
                    prop_assert!(c >= b.lo && c <= b.hi);
                }
            }
        }
    }
}
