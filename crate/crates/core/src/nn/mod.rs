//! Dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! Batches are stored row-major: one example per row. Gradients returned by
//! [`DenseNetwork::backward`] are those of the scalar loss whose gradient
//! with respect to the network output is supplied, summed over the batch.

mod checkpoint;
mod optim;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use optim::{Optimizer, OptimizerKind};

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation and the output.
    fn derivative(self, z: f64, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
            Activation::Identity => 1.0,
        }
    }
}

/// One affine map `x·W + b`; `weights` has shape `(inputs, outputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseNetwork {
    layers: Vec<Layer>,
    hidden: Activation,
    output: Activation,
    /// Identifies this parameter state; bumped on every mutation.
    version: u64,
}

impl PartialEq for DenseNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.hidden == other.hidden && self.output == other.output
    }
}

/// Activations retained by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer; `activations[0]` is the network input.
    activations: Vec<Array2<f64>>,
    /// Pre-activation of every layer.
    pre_activations: Vec<Array2<f64>>,
    output: Array2<f64>,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    /// Pre-activations of the output layer.
    pub fn output_pre_activation(&self) -> &Array2<f64> {
        self.pre_activations.last().expect("network has layers")
    }

    pub fn batch_size(&self) -> usize {
        self.output.nrows()
    }
}

/// Parameter gradients, plus the gradient with respect to the input batch.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub input: Array2<f64>,
}

impl GradientTape {
    pub fn global_norm(&self) -> f64 {
        let w: f64 = self.weights.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>()).sum();
        let b: f64 = self.biases.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>()).sum();
        (w + b).sqrt()
    }

    /// Rescales parameter gradients so that their joint norm is at most
    /// `max_norm`. Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn scale(&mut self, k: f64) {
        for g in &mut self.weights {
            g.mapv_inplace(|v| v * k);
        }
        for g in &mut self.biases {
            g.mapv_inplace(|v| v * k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|g| g.iter().all(|v| *v == 0.0))
            && self.biases.iter().all(|g| g.iter().all(|v| *v == 0.0))
    }
}

impl DenseNetwork {
    /// Network with weights and biases drawn uniformly from
    /// `[-1/√fan_in, 1/√fan_in]`.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "a network needs at least an input and an output size");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        rng.random_range(-bound..=bound)
                    }),
                    bias: Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..=bound)),
                }
            })
            .collect();
        Self::from_layers(layers, hidden, output).expect("shapes chain by construction")
    }

    /// Network assembled from explicit layers.
    pub fn from_layers(layers: Vec<Layer>, hidden: Activation, output: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network without layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.ncols() {
                return Err(Error::ShapeMismatch {
                    expected: format!("layer {i} bias of length {}", l.weights.ncols()),
                    found: format!("{}", l.bias.len()),
                });
            }
            if i > 0 && layers[i - 1].weights.ncols() != l.weights.nrows() {
                return Err(Error::ShapeMismatch {
                    expected: format!("layer {i} with {} inputs", layers[i - 1].weights.ncols()),
                    found: format!("{}", l.weights.nrows()),
                });
            }
        }
        Ok(Self {
            layers,
            hidden,
            output,
            version: fresh_id(),
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].weights.nrows()];
        s.extend(self.layers.iter().map(|l| l.weights.ncols()));
        s
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map(|l| l.weights.ncols()).unwrap_or(0)
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access to the layers; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.version = fresh_id();
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_same_shape(&self, other: &DenseNetwork) -> Result<()> {
        if self.sizes() != other.sizes() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.sizes()),
                found: format!("{:?}", other.sizes()),
            });
        }
        Ok(())
    }

    /// Evaluates a batch without keeping intermediate values.
    pub fn predict(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(input)?;
        let mut x = input.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let act = self.activation_of(i);
            let mut z = x.dot(&l.weights);
            z += &l.bias;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        Ok(x)
    }

    fn check_input(&self, input: ArrayView2<f64>) -> Result<()> {
        if input.ncols() != self.input_size() {
            return Err(Error::ShapeMismatch {
                expected: format!("input width {}", self.input_size()),
                found: format!("{}", input.ncols()),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut x = input.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let act = self.activation_of(i);
            let mut z = x.dot(&l.weights);
            z += &l.bias;
            let out = z.mapv(|v| act.apply(v));
            activations.push(x);
            pre_activations.push(z);
            x = out;
        }
        Ok(ForwardCache {
            activations,
            pre_activations,
            output: x,
            version: self.version,
        })
    }

    /// Reverse pass for the loss with `output_grad = ∂L/∂output`.
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>) -> Result<GradientTape> {
        self.backward_with_pre_activation(cache, output_grad, None)
    }

    /// Reverse pass with an extra gradient term `∂L/∂z` injected directly at
    /// the output layer's pre-activations.
    pub fn backward_with_pre_activation(
        &self,
        cache: &ForwardCache,
        output_grad: ArrayView2<f64>,
        pre_activation_grad: Option<ArrayView2<f64>>,
    ) -> Result<GradientTape> {
        if cache.version != self.version {
            return Err(Error::StaleCache {
                cache: cache.version,
                network: self.version,
            });
        }
        if output_grad.dim() != cache.output.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", cache.output.dim()),
                found: format!("{:?}", output_grad.dim()),
            });
        }
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);

        let mut delta = output_grad.to_owned();
        let act = self.output;
        Zip::from(&mut delta)
            .and(&cache.pre_activations[n - 1])
            .and(&cache.output)
            .for_each(|d, &z, &o| *d *= act.derivative(z, o));
        if let Some(extra) = pre_activation_grad {
            if extra.dim() != delta.dim() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{:?}", delta.dim()),
                    found: format!("{:?}", extra.dim()),
                });
            }
            delta += &extra;
        }

        for i in (0..n).rev() {
            weights.push(cache.activations[i].t().dot(&delta));
            biases.push(delta.sum_axis(Axis(0)));
            let mut upstream = delta.dot(&self.layers[i].weights.t());
            if i > 0 {
                let act = self.activation_of(i - 1);
                Zip::from(&mut upstream)
                    .and(&cache.pre_activations[i - 1])
                    .and(&cache.activations[i])
                    .for_each(|d, &z, &o| *d *= act.derivative(z, o));
            }
            delta = upstream;
        }
        weights.reverse();
        biases.reverse();
        Ok(GradientTape {
            weights,
            biases,
            input: delta,
        })
    }

    /// Plain gradient descent step `θ ← θ − lr·∇θ`.
    pub fn sgd_update(&mut self, tape: &GradientTape, learning_rate: f64) -> Result<()> {
        self.check_tape(tape)?;
        for (l, (gw, gb)) in self.layers_mut().iter_mut().zip(tape.weights.iter().zip(&tape.biases)) {
            l.weights.scaled_add(-learning_rate, gw);
            l.bias.scaled_add(-learning_rate, gb);
        }
        Ok(())
    }

    fn check_tape(&self, tape: &GradientTape) -> Result<()> {
        let ok = tape.weights.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(tape.weights.iter().zip(&tape.biases))
                .all(|(l, (gw, gb))| l.weights.dim() == gw.dim() && l.bias.len() == gb.len());
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: format!("gradients for {:?}", self.sizes()),
                found: format!("{} layer gradients", tape.weights.len()),
            })
        }
    }

    /// Moves `self` toward `online`: `θ ← (1−τ)·θ + τ·θ_online`.
    pub fn soft_update(&mut self, online: &DenseNetwork, tau: f64) -> Result<()> {
        self.check_same_shape(online)?;
        for (t, o) in self.layers_mut().iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weights)
                .and(&o.weights)
                .for_each(|t, &o| *t = (1.0 - tau) * *t + tau * o);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = (1.0 - tau) * *t + tau * o);
        }
        Ok(())
    }

    /// All parameters in checkpoint order: per layer, weights row-major then
    /// bias.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_flat_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", self.parameter_count()),
                found: format!("{}", params.len()),
            });
        }
        let mut it = params.iter().copied();
        for l in self.layers_mut() {
            for w in l.weights.iter_mut() {
                *w = it.next().expect("length checked");
            }
            for b in l.bias.iter_mut() {
                *b = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }
}

/// Quadratic penalty on output pre-activations beyond `±threshold`:
/// `coef·Σ max(0, |z| − threshold)²` summed over the whole batch.
///
/// Returns the penalty and its gradient with respect to the pre-activations.
pub fn saturation_penalty(cache: &ForwardCache, threshold: f64, coef: f64) -> (f64, Array2<f64>) {
    let z = cache.output_pre_activation();
    let mut penalty = 0.0;
    let grad = z.mapv(|v| {
        let excess = v.abs() - threshold;
        if excess > 0.0 {
            penalty += coef * excess * excess;
            2.0 * coef * excess * v.signum()
        } else {
            0.0
        }
    });
    (penalty, grad)
}
