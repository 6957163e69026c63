use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::backprop::gradients_standardized;
use super::config::MapperConfig;
use super::loss::{bce_with_logits, sigmoid};
use super::network::MapperParams;
use crate::error::{Error, Result};
use crate::metrics::auroc;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::split::stratified_split;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats<T> {
    /// Training objective at the start of the epoch.
    pub train_loss: T,
    /// Validation AUROC after the epoch's update.
    pub val_auroc: T,
    /// Validation cross-entropy after the update; breaks AUROC ties.
    pub val_loss: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory<T> {
    pub epochs: Vec<EpochStats<T>>,
    /// Zero-based index into `epochs` of the returned snapshot.
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Every training batch was single-class, so only BCE was optimized.
    pub rank_term_inactive: bool,
    pub train_size: usize,
    pub val_size: usize,
}

impl<T: Scalar> TrainHistory<T> {
    pub fn best(&self) -> &EpochStats<T> {
        &self.epochs[self.best_epoch]
    }
}

fn flatten<T: Scalar>(data: &[(Vec<T>, bool)], idx: &[usize]) -> (Vec<T>, Vec<bool>) {
    let mut x = Vec::with_capacity(idx.len() * data.first().map_or(0, |d| d.0.len()));
    let mut y = Vec::with_capacity(idx.len());
    for &i in idx {
        x.extend_from_slice(&data[i].0);
        y.push(data[i].1);
    }
    (x, y)
}

/// Mean and population standard deviation per input column; a zero spread
/// is replaced by one.
fn column_stats<T: Scalar>(x: &[T], d: usize) -> (Vec<T>, Vec<T>) {
    let n = T::from_count(x.len() / d);
    let mean: Vec<T> = (0..d).map(|k| x.iter().skip(k).step_by(d).copied().sum::<T>() / n).collect();
    let scale = (0..d)
        .map(|k| {
            let var = x.iter().skip(k).step_by(d).map(|v| (*v - mean[k]).powi(2)).sum::<T>() / n;
            let sd = var.sqrt();
            if sd > T::zero() && sd.is_finite() {
                sd
            } else {
                T::one()
            }
        })
        .collect();
    (mean, scale)
}

/// Trains the calibration network with full-batch Adam and early stopping
/// on validation AUROC.
///
/// A stratified `val_fraction` of the examples is held out (drawn from the
/// config seed). After each update the validation AUROC is measured. An
/// epoch replaces the kept snapshot when its AUROC beats the snapshot's by
/// more than `auroc_tolerance`, or when it is within `auroc_tolerance` of
/// the best AUROC seen so far and has lower validation cross-entropy. The
/// snapshot's AUROC therefore never trails the maximum by more than the
/// tolerance. Training stops after `patience` epochs without a replacement,
/// or at `max_epochs`.
///
/// For a score whose posterior is monotone the validation AUROC saturates
/// within a few epochs while calibration is still improving; the tolerance
/// lets the later, better calibrated epochs win.
pub fn train<T: Scalar>(data: &[(Vec<T>, bool)], cfg: &MapperConfig) -> Result<(MapperParams<T>, TrainHistory<T>)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::SplitDegenerate(format!("need at least 2 examples, got {}", data.len())));
    }
    for (s, _) in data {
        if s.len() != cfg.input_dim {
            return Err(Error::DimensionMismatch { expected: cfg.input_dim, got: s.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training input"));
        }
    }
    let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
    let (train_idx, val_idx) = stratified_split(&labels, cfg.val_fraction, &mut stream_rng(cfg.seed, Stream::ValidationSplit))?;
    let (train_raw, train_y) = flatten(data, &train_idx);
    let (val_raw, val_y) = flatten(data, &val_idx);

    let mut params: MapperParams<T> = MapperParams::init(cfg, &mut stream_rng(cfg.seed, Stream::WeightInit));
    let (mean, scale) = column_stats(&train_raw, cfg.input_dim);
    params.input_mean = mean;
    params.input_scale = scale;
    let train_x = params.standardize(&train_raw);
    let val_x = params.standardize(&val_raw);

    let lr = T::lit(cfg.learning_rate);
    let phi = T::lit(cfg.phi_rank);
    let mut adam = AdamState::new(&params);
    let mut epochs = Vec::with_capacity(cfg.max_epochs.min(1024));
    let mut best: Option<(usize, T, T, MapperParams<T>)> = None;
    let mut since_best = 0usize;
    let mut max_auroc = T::neg_infinity();
    let tol = T::lit(cfg.auroc_tolerance);
    let mut rank_term_inactive = true;

    for epoch in 0..cfg.max_epochs {
        let eval = gradients_standardized(&params, &train_x, &train_y, phi)?;
        rank_term_inactive &= eval.no_pairs;
        adam_step(&mut params, &eval.grads, &mut adam, lr)?;
        if !params.is_finite() {
            return Err(Error::NonFinite("parameters diverged during training"));
        }

        let val_logits = params.forward_batch(&val_x, val_y.len()).pop().expect("output layer");
        let val_loss = bce_with_logits(&val_logits, &val_y)?;
        let scored: Vec<(T, bool)> = val_logits.iter().map(|&z| sigmoid(z)).zip(val_y.iter().copied()).collect();
        let val_auroc = auroc(&scored)?;
        epochs.push(EpochStats { train_loss: eval.loss, val_auroc, val_loss });

        max_auroc = max_auroc.max(val_auroc);
        let improved = match &best {
            None => true,
            Some((_, a, l, _)) => val_auroc > *a + tol || (val_auroc >= max_auroc - tol && val_loss < *l),
        };
        if improved {
            best = Some((epoch, val_auroc, val_loss, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (best_epoch, _, _, snapshot) = best.expect("max_epochs >= 1");
    let stopped_early = epochs.len() < cfg.max_epochs;
    let history = TrainHistory {
        epochs,
        best_epoch,
        stopped_early,
        rank_term_inactive,
        train_size: train_y.len(),
        val_size: val_y.len(),
    };
    Ok((snapshot, history))
}

/// [`train`] for a single raw score per example.
pub fn train_scalar<T: Scalar>(scores: &[T], labels: &[bool], cfg: &MapperConfig) -> Result<(MapperParams<T>, TrainHistory<T>)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if cfg.input_dim != 1 {
        return Err(Error::DimensionMismatch { expected: cfg.input_dim, got: 1 });
    }
    let data: Vec<(Vec<T>, bool)> = scores.iter().zip(labels).map(|(s, l)| (vec![*s], *l)).collect();
    train(&data, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> Vec<(Vec<f64>, bool)> {
        (0..n)
            .map(|i| {
                let s = -2.0 + 4.0 * (i as f64 + 0.5) / n as f64;
                let s = if s > 0.0 { s + 0.25 } else { s - 0.25 };
                (vec![s], s > 0.0)
            })
            .collect()
    }

    #[test]
    fn single_epoch_budget() {
        let cfg = MapperConfig { max_epochs: 1, patience: 1, ..MapperConfig::default() };
        let (_, h) = train(&separable(40), &cfg).unwrap();
        assert_eq!(h.epochs.len(), 1);
        assert_eq!(h.best_epoch, 0);
        assert!(!h.stopped_early);
    }

    fn noisy(n: usize) -> Vec<(Vec<f64>, bool)> {
        crate::synth::logistic_fixture(n, 11, 0).into_iter().map(|(s, c)| (vec![s], c)).collect()
    }

    #[test]
    fn strict_selection_attains_max_auroc() {
        let cfg = MapperConfig { max_epochs: 80, auroc_tolerance: 0.0, ..MapperConfig::default() };
        let (_, h) = train(&noisy(300), &cfg).unwrap();
        let max = h.epochs.iter().map(|e| e.val_auroc).fold(f64::MIN, f64::max);
        assert_eq!(h.best().val_auroc, max);
        let first_max = h.epochs.iter().position(|e| e.val_auroc == max).unwrap();
        assert!(h.epochs[first_max..].iter().filter(|e| e.val_auroc == max).all(|e| e.val_loss >= h.best().val_loss));
    }

    #[test]
    fn tolerant_selection_stays_within_tolerance() {
        let cfg = MapperConfig { max_epochs: 120, ..MapperConfig::default() };
        let (_, h) = train(&noisy(300), &cfg).unwrap();
        let max = h.epochs.iter().map(|e| e.val_auroc).fold(f64::MIN, f64::max);
        assert!(h.best().val_auroc >= max - cfg.auroc_tolerance);
    }

    #[test]
    fn patience_stops_training() {
        let cfg = MapperConfig { max_epochs: 400, patience: 5, ..MapperConfig::default() };
        let (_, h) = train(&noisy(200), &cfg).unwrap();
        assert!(h.stopped_early);
        assert_eq!(h.epochs.len(), h.best_epoch + 1 + 5);
    }

    #[test]
    fn degenerate_inputs() {
        let cfg = MapperConfig::default();
        assert!(matches!(train::<f64>(&[(vec![0.0], true)], &cfg), Err(Error::SplitDegenerate(_))));
        let one_negative: Vec<(Vec<f64>, bool)> = (0..10).map(|i| (vec![i as f64], i != 3)).collect();
        assert!(matches!(train(&one_negative, &cfg), Err(Error::SplitDegenerate(_))));
        assert!(matches!(train(&[(vec![0.0, 1.0], true), (vec![1.0, 0.0], false)], &cfg), Err(Error::DimensionMismatch { .. })));
        let bad = MapperConfig { val_fraction: 1.0, ..MapperConfig::default() };
        assert!(matches!(train(&separable(10), &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn standardization_constants() {
        let (mean, scale) = column_stats(&[1.0, 10.0, 3.0, 10.0], 2);
        assert_eq!(mean, vec![2.0, 10.0]);
        assert_eq!(scale, vec![1.0, 1.0]);
    }

    #[test]
    fn trains_in_f32() {
        let data: Vec<(Vec<f32>, bool)> = separable(60).into_iter().map(|(s, l)| (vec![s[0] as f32], l)).collect();
        let cfg = MapperConfig { max_epochs: 100, ..MapperConfig::default() };
        let (p, h) = train(&data, &cfg).unwrap();
        assert!(p.is_finite());
        assert_eq!(h.best().val_auroc, 1.0f32);
    }
}
