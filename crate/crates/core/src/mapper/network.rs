use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::MapperConfig;
use super::loss::sigmoid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fully connected layer. `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![T::zero(); inputs * outputs], bias: vec![T::zero(); outputs] }
    }

    fn row(&self, r: usize) -> &[T] {
        &self.weights[r * self.inputs..(r + 1) * self.inputs]
    }
}

/// Weights of the calibration network plus the input standardization it was
/// trained with, so applying it needs nothing else.
///
/// Layout: `input_dim → width → … → width → 1`, ReLU after every hidden
/// layer, sigmoid on the scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MapperParams<T> {
    pub layers: Vec<Dense<T>>,
    pub input_mean: Vec<T>,
    pub input_scale: Vec<T>,
}

/// Gradient of the objective with the same shapes as the trainable layers.
pub type Gradients<T> = Vec<Dense<T>>;

impl<T: Scalar> MapperParams<T> {
    /// All-zero network with identity standardization.
    pub fn zeros(input_dim: usize, hidden_width: usize, hidden_layers: usize) -> Self {
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = input_dim;
        for _ in 0..hidden_layers {
            layers.push(Dense::zeros(fan_in, hidden_width));
            fan_in = hidden_width;
        }
        layers.push(Dense::zeros(fan_in, 1));
        Self { layers, input_mean: vec![T::zero(); input_dim], input_scale: vec![T::one(); input_dim] }
    }

    /// Weights uniform on `±sqrt(6 / fan_in)`, biases zero.
    pub fn init<R: Rng>(cfg: &MapperConfig, rng: &mut R) -> Self {
        let mut params = Self::zeros(cfg.input_dim, cfg.hidden_width, cfg.hidden_layers);
        for layer in &mut params.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit(rng.random_range(-limit..limit));
            }
        }
        params
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .chain(self.input_mean.iter().chain(&self.input_scale))
            .all(|v| v.is_finite())
    }

    /// Checks layer shapes chain together and end in a scalar head.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let Some(last) = self.layers.last() else {
            return bad("network has no layers".into());
        };
        if last.outputs != 1 {
            return bad(format!("output head has {} units, expected 1", last.outputs));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return bad(format!("layer {i} arrays do not match its {}x{} shape", l.outputs, l.inputs));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return bad(format!("layer {i} expects {} inputs, previous layer gives {}", l.inputs, self.layers[i - 1].outputs));
            }
        }
        let d = self.input_dim();
        if self.input_mean.len() != d || self.input_scale.len() != d {
            return bad("standardization constants do not match input dimension".into());
        }
        if self.input_scale.iter().any(|s| !(*s > T::zero())) {
            return bad("standardization scale must be positive".into());
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("mapper parameters"));
        }
        Ok(())
    }

    /// Standardized copy of row-major `n × input_dim` raw inputs.
    pub(crate) fn standardize(&self, raw: &[T]) -> Vec<T> {
        let d = self.input_dim();
        raw.chunks_exact(d)
            .flat_map(|row| row.iter().enumerate().map(|(k, v)| (*v - self.input_mean[k]) / self.input_scale[k]))
            .collect()
    }

    /// Forward pass on standardized inputs, returning every layer's output.
    /// The last entry holds the logits.
    pub(crate) fn forward_batch(&self, standardized: &[T], n: usize) -> Vec<Vec<T>> {
        let mut activations: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let input: &[T] = if l == 0 { standardized } else { &activations[l - 1] };
            let mut out = vec![T::zero(); n * layer.outputs];
            for (a, o) in input.chunks_exact(layer.inputs).zip(out.chunks_exact_mut(layer.outputs)) {
                for (r, slot) in o.iter_mut().enumerate() {
                    let z = layer.row(r).iter().zip(a).fold(layer.bias[r], |acc, (w, x)| acc + *w * *x);
                    *slot = if l < last { z.max(T::zero()) } else { z };
                }
            }
            activations.push(out);
        }
        activations
    }

    /// Pre-sigmoid logits for row-major raw inputs.
    pub(crate) fn logits_flat(&self, raw: &[T]) -> Vec<T> {
        let n = raw.len() / self.input_dim();
        let std = self.standardize(raw);
        self.forward_batch(&std, n).pop().expect("at least one layer")
    }

    /// Logit and probability for one raw score vector.
    pub fn forward(&self, s: &[T]) -> Result<(T, T)> {
        if s.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: s.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mapper input"));
        }
        let z = self.logits_flat(s)[0];
        Ok((z, sigmoid(z)))
    }

    /// Probabilities for a batch of raw score vectors, in order.
    pub fn apply(&self, scores: &[Vec<T>]) -> Result<Vec<T>> {
        let d = self.input_dim();
        let mut flat = Vec::with_capacity(scores.len() * d);
        for s in scores {
            if s.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.len() });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("mapper input"));
            }
            flat.extend_from_slice(s);
        }
        if flat.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.logits_flat(&flat).into_iter().map(sigmoid).collect())
    }

    /// Probabilities for a batch of scalar scores (one-dimensional mapper).
    pub fn apply_scalar(&self, scores: &[T]) -> Result<Vec<T>> {
        if self.input_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: 1 });
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mapper input"));
        }
        if scores.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.logits_flat(scores).into_iter().map(sigmoid).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn zero_network_is_half() {
        let p = MapperParams::<f64>::zeros(1, 32, 3);
        assert_eq!(p.forward(&[3.7]).unwrap(), (0.0, 0.5));
        assert_eq!(p.apply(&[vec![-1.0], vec![100.0]]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn hand_built_affine_network() {
        // One hidden unit passing s through ReLU (s >= 0 here), head 2h − 1.
        let mut p = MapperParams::<f64>::zeros(1, 1, 1);
        p.layers[0].weights[0] = 1.0;
        p.layers[1].weights[0] = 2.0;
        p.layers[1].bias[0] = -1.0;
        let (z, prob) = p.forward(&[1.0]).unwrap();
        assert_eq!(z, 1.0);
        assert!((prob - 0.731_059).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = MapperParams::<f64>::zeros(2, 4, 1);
        assert!(matches!(p.forward(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
        assert!(matches!(p.forward(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(p.apply(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(p.apply_scalar(&[1.0]).is_err());
    }

    #[test]
    fn init_shapes_and_range() {
        let cfg = MapperConfig::default();
        let p: MapperParams<f64> = MapperParams::init(&cfg, &mut stream_rng(3, Stream::WeightInit));
        p.validate().unwrap();
        assert_eq!(p.layers.len(), 4);
        assert_eq!(p.param_count(), (32 + 32) + 2 * (32 * 32 + 32) + (32 + 1));
        let limit = (6.0f64 / 32.0).sqrt();
        assert!(p.layers[1].weights.iter().all(|w| w.abs() <= limit));
        assert!(p.layers[1].bias.iter().all(|b| *b == 0.0));
    }
}
