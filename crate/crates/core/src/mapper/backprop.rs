//! Exact gradient of the training objective by reverse-mode accumulation
//! through the dense/ReLU stack.

use super::loss::objective_with_grad;
use super::network::{Dense, Gradients, MapperParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Objective value and its gradient at one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub loss: T,
    pub grads: Gradients<T>,
    /// The batch held a single class, so the ranking term was zero.
    pub no_pairs: bool,
}

/// Gradient of `BCE + phi_rank · rank` over the batch, with respect to every
/// weight and bias. The ReLU derivative at exactly zero is taken as zero.
pub fn gradients<T: Scalar>(params: &MapperParams<T>, inputs: &[Vec<T>], labels: &[bool], phi_rank: T) -> Result<Evaluation<T>> {
    if inputs.len() != labels.len() {
        return Err(Error::LengthMismatch { left: inputs.len(), right: labels.len() });
    }
    if inputs.is_empty() {
        return Err(Error::EmptyInput("gradient over an empty batch"));
    }
    let d = params.input_dim();
    let mut flat = Vec::with_capacity(inputs.len() * d);
    for s in inputs {
        if s.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: s.len() });
        }
        flat.extend_from_slice(s);
    }
    gradients_standardized(params, &params.standardize(&flat), labels, phi_rank)
}

/// Same as [`gradients`] on inputs that are already standardized and flattened.
pub(crate) fn gradients_standardized<T: Scalar>(
    params: &MapperParams<T>,
    standardized: &[T],
    labels: &[bool],
    phi_rank: T,
) -> Result<Evaluation<T>> {
    let n = labels.len();
    let acts = params.forward_batch(standardized, n);
    let logits = acts.last().expect("at least one layer");
    let objective = objective_with_grad(logits, labels, phi_rank)?;

    let mut grads: Gradients<T> = params.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
    let mut delta = objective.grad;
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let input: &[T] = if l == 0 { standardized } else { &acts[l - 1] };
        let g = &mut grads[l];
        let mut delta_prev = if l > 0 { vec![T::zero(); n * layer.inputs] } else { Vec::new() };
        for i in 0..n {
            let a = &input[i * layer.inputs..(i + 1) * layer.inputs];
            for r in 0..layer.outputs {
                let dr = delta[i * layer.outputs + r];
                if dr == T::zero() {
                    continue;
                }
                g.bias[r] = g.bias[r] + dr;
                let row = r * layer.inputs..(r + 1) * layer.inputs;
                for (gw, x) in g.weights[row.clone()].iter_mut().zip(a) {
                    *gw = *gw + dr * *x;
                }
                if l > 0 {
                    let dp = &mut delta_prev[i * layer.inputs..(i + 1) * layer.inputs];
                    for (d, w) in dp.iter_mut().zip(&layer.weights[row]) {
                        *d = *d + dr * *w;
                    }
                }
            }
        }
        if l > 0 {
            // Backprop through the ReLU that produced `input`.
            for (d, a) in delta_prev.iter_mut().zip(input) {
                if *a <= T::zero() {
                    *d = T::zero();
                }
            }
            delta = delta_prev;
        }
    }
    Ok(Evaluation { loss: objective.loss, grads, no_pairs: objective.no_pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_balanced_batch_has_zero_output_bias_gradient() {
        let p = MapperParams::<f64>::zeros(1, 8, 3);
        let inputs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let labels = [true, false, true, false, true, false];
        let e = gradients(&p, &inputs, &labels, 0.0).unwrap();
        assert_eq!(e.grads.last().unwrap().bias[0], 0.0);
        assert!((e.loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn saturated_prediction_has_vanishing_gradient() {
        let mut p = MapperParams::<f64>::zeros(1, 2, 1);
        p.layers[1].bias[0] = 60.0;
        let e = gradients(&p, &[vec![0.3]], &[true], 0.0).unwrap();
        assert!(e.grads.last().unwrap().bias[0].abs() < 1e-25);
    }

    #[test]
    fn shape_errors() {
        let p = MapperParams::<f64>::zeros(2, 4, 1);
        assert!(gradients(&p, &[vec![1.0]], &[true], 0.0).is_err());
        assert!(gradients(&p, &[], &[], 0.0).is_err());
        assert!(gradients(&p, &[vec![1.0, 2.0]], &[true, false], 0.0).is_err());
    }
}
