use serde::{Deserialize, Serialize};

use super::network::{Dense, Gradients, MapperParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// First/second moment estimates for every trainable parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamState<T> {
    pub m: Vec<Dense<T>>,
    pub v: Vec<Dense<T>>,
    pub step: u32,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zero moments with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(params: &MapperParams<T>) -> Self {
        let zeros = || params.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect::<Vec<_>>();
        Self { m: zeros(), v: zeros(), step: 0, beta1: T::lit(0.9), beta2: T::lit(0.999), eps: T::lit(1e-8) }
    }
}

fn same_shape<T>(a: &[Dense<T>], b: &[Dense<T>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.inputs == y.inputs && x.outputs == y.outputs)
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<T: Scalar>(params: &mut MapperParams<T>, grads: &Gradients<T>, state: &mut AdamState<T>, lr: T) -> Result<()> {
    if !same_shape(&params.layers, grads) || !same_shape(&params.layers, &state.m) || !same_shape(&params.layers, &state.v) {
        return Err(Error::InvalidConfig("Adam state, gradient and parameter shapes differ".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let correction1 = T::one() - b1.powi(t);
    let correction2 = T::one() - b2.powi(t);

    let update = |theta: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
        for (((p, g), m), v) in theta.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (T::one() - b1) * *g;
            *v = b2 * *v + (T::one() - b2) * *g * *g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (((layer, g), m), v) in params.layers.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
        update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}
