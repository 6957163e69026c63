//! Objective: binary cross-entropy plus a weighted pairwise logistic
//! ranking term over all positive/negative pairs.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn check_lengths<T>(values: &[T], labels: &[bool]) -> Result<()> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch { left: values.len(), right: labels.len() });
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("loss over an empty batch"));
    }
    Ok(())
}

/// Mean binary cross-entropy of probabilities in `(0, 1)`.
pub fn bce_loss<T: Scalar>(probs: &[T], labels: &[bool]) -> Result<T> {
    check_lengths(probs, labels)?;
    let mut total = T::zero();
    for (&p, &c) in probs.iter().zip(labels) {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::OutOfRange { what: "probability in bce_loss", value: p.to_f64().unwrap_or(f64::NAN) });
        }
        total = total - if c { p.ln() } else { (T::one() - p).ln() };
    }
    Ok(total / T::from_count(probs.len()))
}

/// Mean binary cross-entropy computed from logits:
/// `softplus(z) − C z` per example.
pub fn bce_with_logits<T: Scalar>(logits: &[T], labels: &[bool]) -> Result<T> {
    check_lengths(logits, labels)?;
    let total = logits
        .iter()
        .zip(labels)
        .map(|(&z, &c)| softplus(z) - if c { z } else { T::zero() })
        .fold(T::zero(), |a, b| a + b);
    Ok(total / T::from_count(logits.len()))
}

/// Ranking term value, or a marker that the batch had no pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankLoss<T> {
    Value(T),
    /// Single-class batch: the term is taken as zero.
    NoPairs,
}

impl<T: Scalar> RankLoss<T> {
    pub fn value(self) -> T {
        match self {
            RankLoss::Value(v) => v,
            RankLoss::NoPairs => T::zero(),
        }
    }
}

/// Mean of `ln(1 + exp(−(z_i − z_j)))` over pairs with `C_i = 1`, `C_j = 0`.
pub fn rank_loss<T: Scalar>(logits: &[T], labels: &[bool]) -> Result<RankLoss<T>> {
    check_lengths(logits, labels)?;
    Ok(rank_terms(logits, labels, false).0)
}

/// Rank loss and (optionally) its gradient with respect to each logit.
fn rank_terms<T: Scalar>(logits: &[T], labels: &[bool], want_grad: bool) -> (RankLoss<T>, Vec<T>) {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let mut grad = if want_grad { vec![T::zero(); logits.len()] } else { Vec::new() };
    if pos.is_empty() || neg.is_empty() {
        return (RankLoss::NoPairs, grad);
    }
    let inv_pairs = T::one() / (T::from_count(pos.len()) * T::from_count(neg.len()));
    let neg_logits: Vec<T> = neg.iter().map(|&j| logits[j]).collect();
    let mut neg_grad = vec![T::zero(); neg.len()];
    let mut total = T::zero();
    for &i in &pos {
        let zi = logits[i];
        let mut row = T::zero();
        let mut row_grad = T::zero();
        for (k, &zj) in neg_logits.iter().enumerate() {
            let margin = zi - zj;
            row = row + softplus(-margin);
            if want_grad {
                // d/dmargin softplus(-margin) = -sigmoid(-margin)
                let s = sigmoid(-margin);
                row_grad = row_grad + s;
                neg_grad[k] = neg_grad[k] + s;
            }
        }
        total = total + row;
        if want_grad {
            grad[i] = -row_grad * inv_pairs;
        }
    }
    if want_grad {
        for (k, &j) in neg.iter().enumerate() {
            grad[j] = neg_grad[k] * inv_pairs;
        }
    }
    (RankLoss::Value(total * inv_pairs), grad)
}

/// `BCE + phi_rank · rank`, both from logits.
pub fn total_loss<T: Scalar>(logits: &[T], labels: &[bool], phi_rank: T) -> Result<T> {
    check_lengths(logits, labels)?;
    let bce = bce_with_logits(logits, labels)?;
    if phi_rank == T::zero() {
        return Ok(bce);
    }
    Ok(bce + phi_rank * rank_terms(logits, labels, false).0.value())
}

/// Loss value and its gradient with respect to every logit.
#[derive(Debug, Clone)]
pub struct LogitObjective<T> {
    pub loss: T,
    pub grad: Vec<T>,
    /// True when the batch contained no positive/negative pair.
    pub no_pairs: bool,
}

pub fn objective_with_grad<T: Scalar>(logits: &[T], labels: &[bool], phi_rank: T) -> Result<LogitObjective<T>> {
    check_lengths(logits, labels)?;
    let n = T::from_count(logits.len());
    let bce = bce_with_logits(logits, labels)?;
    let mut grad: Vec<T> = logits
        .iter()
        .zip(labels)
        .map(|(&z, &c)| (sigmoid(z) - if c { T::one() } else { T::zero() }) / n)
        .collect();
    if phi_rank == T::zero() {
        let no_pairs = labels.iter().all(|&c| c) || labels.iter().all(|&c| !c);
        return Ok(LogitObjective { loss: bce, grad, no_pairs });
    }
    let (rank, rank_grad) = rank_terms(logits, labels, true);
    for (g, r) in grad.iter_mut().zip(&rank_grad) {
        *g = *g + phi_rank * *r;
    }
    Ok(LogitObjective { loss: bce + phi_rank * rank.value(), grad, no_pairs: rank == RankLoss::NoPairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1.0f64) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(-3.0f64) + sigmoid(3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0f64) - LN_2).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(-1.0f64) - 0.313_261_687_518_222_8).abs() < 1e-15);
    }

    #[test]
    fn bce_examples() {
        let l = bce_loss(&[0.5f64, 0.5, 0.5], &[true, false, true]).unwrap();
        assert!((l - LN_2).abs() < 1e-15);
        let l = bce_loss(&[0.9f64], &[true]).unwrap();
        assert!((l - 0.105_360_515_657_826_3).abs() < 1e-12);
        let l = bce_with_logits(&[40.0, -40.0], &[true, false]).unwrap();
        assert!(l < 1e-16);
        assert!(bce_loss::<f64>(&[], &[]).is_err());
        assert!(bce_loss(&[1.0], &[true]).is_err());
    }

    #[test]
    fn logit_and_prob_forms_agree() {
        let z = [-2.0f64, -0.3, 0.0, 0.7, 3.1];
        let c = [false, true, true, false, true];
        let p: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        assert!((bce_loss(&p, &c).unwrap() - bce_with_logits(&z, &c).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rank_examples() {
        let equal = rank_loss(&[0.3f64, 0.3, 0.3, 0.3], &[true, false, true, false]).unwrap();
        assert!((equal.value() - LN_2).abs() < 1e-15);
        let one_pair = rank_loss(&[1.0f64, 0.0], &[true, false]).unwrap();
        assert!((one_pair.value() - 0.313_261_687_518_222_8).abs() < 1e-15);
        let far = rank_loss(&[500.0, -500.0], &[true, false]).unwrap();
        assert_eq!(far.value(), 0.0);
        assert_eq!(rank_loss(&[1.0, 2.0], &[true, true]).unwrap(), RankLoss::NoPairs);
    }

    #[test]
    fn total_examples() {
        let z = [0.4, -1.2, 2.0];
        let c = [true, false, false];
        assert_eq!(total_loss(&z, &c, 0.0).unwrap(), bce_with_logits(&z, &c).unwrap());

        let phi = 0.7f64;
        let flat = total_loss(&[0.0; 4], &[true, false, true, false], phi).unwrap();
        assert!((flat - (LN_2 + phi * LN_2)).abs() < 1e-15);

        // BCE ½(−ln σ(1) − ln(1 − σ(0))) plus ln(1 + e^{−1}).
        let v = total_loss(&[1.0f64, 0.0], &[true, false], 1.0).unwrap();
        let expected = 0.5 * (0.313_261_687_518_222_8 + LN_2) + 0.313_261_687_518_222_8;
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.816_466).abs() < 1e-6);
    }

    #[test]
    fn logit_gradient_matches_central_differences() {
        let z = vec![0.4f64, -1.2, 2.0, 0.1, -0.5];
        let c = [true, false, false, true, true];
        for phi in [0.0, 1.0, 2.5] {
            let obj = objective_with_grad(&z, &c, phi).unwrap();
            assert!((obj.loss - total_loss(&z, &c, phi).unwrap()).abs() < 1e-15);
            for i in 0..z.len() {
                let h = 1e-6;
                let mut up = z.clone();
                up[i] += h;
                let mut down = z.clone();
                down[i] -= h;
                let fd = (total_loss(&up, &c, phi).unwrap() - total_loss(&down, &c, phi).unwrap()) / (2.0 * h);
                assert!((fd - obj.grad[i]).abs() < 1e-8, "phi={phi} i={i} fd={fd} an={}", obj.grad[i]);
            }
        }
    }

    #[test]
    fn balanced_zero_logits_have_zero_mean_grad() {
        let obj = objective_with_grad(&[0.0; 4], &[true, false, true, false], 0.0).unwrap();
        let mean: f64 = obj.grad.iter().sum();
        assert_eq!(mean, 0.0);
    }

    #[test]
    fn single_class_batch_flags_no_pairs() {
        let obj = objective_with_grad(&[0.2, 0.3], &[true, true], 1.0).unwrap();
        assert!(obj.no_pairs);
        assert_eq!(obj.loss, bce_with_logits(&[0.2, 0.3], &[true, true]).unwrap());
    }
}
