//! The tanh multilayer perceptron `u_NN`.
//!
//! Parameters live in one flat vector, layer-major. Each layer stores its
//! weight matrix row-major as `fan_out × fan_in` (entry `W[o][i]` at
//! `o·fan_in + i`) followed by its `fan_out` biases. Layers run
//! `input_dim → n → … → n → 1` with `hidden_layers` tanh layers of width
//! `neurons_per_layer` and a linear scalar output.

mod batch;
mod gemm;

use alloc::vec::Vec;
use core::ops::{Add, Mul};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use batch::BatchWorkspace;

use crate::diff::{DualJet2, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Tanh,
}

/// Architecture and initialisation seed.
///
/// `hidden_layers` counts the tanh layers only; the linear output layer is
/// implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub activation: Activation,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_layers: usize, neurons_per_layer: usize, seed: u64) -> Self {
        NetworkConfig { input_dim, hidden_layers, neurons_per_layer, activation: Activation::Tanh, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.input_dim) {
            return Err(Error::invalid(alloc::format!("input_dim must be 1, 2 or 3 (got {})", self.input_dim)));
        }
        if self.hidden_layers == 0 || self.neurons_per_layer == 0 {
            return Err(Error::invalid("network needs at least one hidden layer and one neuron per layer"));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let n = self.neurons_per_layer;
        let mut shapes = Vec::with_capacity(self.hidden_layers + 1);
        shapes.push((self.input_dim, n));
        for _ in 1..self.hidden_layers {
            shapes.push((n, n));
        }
        shapes.push((n, 1));
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| (i + 1) * o).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    params: Vec<f64>,
}

impl Network {
    /// Glorot-uniform weights from a ChaCha8 stream seeded by `config.seed`, zero biases.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Vec::with_capacity(config.param_count());
        for (fan_in, fan_out) in config.layer_shapes() {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for _ in 0..fan_in * fan_out {
                let u: f64 = rng.random();
                params.push(limit * (2.0 * u - 1.0));
            }
            params.extend(core::iter::repeat_n(0.0, fan_out));
        }
        Ok(Network { config, params })
    }

    pub fn from_params(config: NetworkConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if params.len() != config.param_count() {
            return Err(Error::DimensionMismatch { expected: config.param_count(), found: params.len() });
        }
        Ok(Network { config, params })
    }

    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Network { config, params: alloc::vec![0.0; config.param_count()] })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.config.input_dim {
            return Err(Error::DimensionMismatch { expected: self.config.input_dim, found: len });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        self.check_input(input.len())?;
        Ok(self.forward_with(&self.params, input))
    }

    /// `u`, `∂u/∂x_axis`, `∂²u/∂x_axis²` via a second-order jet.
    pub fn forward_jet(&self, input: &[f64], axis: usize) -> Result<DualJet2<f64>> {
        self.check_input(input.len())?;
        let jets: Vec<DualJet2<f64>> = input
            .iter()
            .enumerate()
            .map(|(i, &x)| if i == axis { DualJet2::variable(x) } else { DualJet2::constant(x) })
            .collect();
        Ok(self.forward_with(&self.params, &jets))
    }

    /// Forward pass over any scalar type; `params` must follow this network's layout.
    ///
    /// Panics if `params` or `input` have the wrong length.
    pub fn forward_with<A, P>(&self, params: &[P], input: &[A]) -> A
    where
        A: Scalar + Mul<P, Output = A> + Add<P, Output = A>,
        P: Copy,
    {
        assert_eq!(params.len(), self.config.param_count(), "parameter vector length");
        assert_eq!(input.len(), self.config.input_dim, "input length");
        let shapes = self.config.layer_shapes();
        let last = shapes.len() - 1;
        let mut acts: Vec<A> = input.to_vec();
        let mut offset = 0;
        for (l, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            let w = &params[offset..offset + fan_in * fan_out];
            let b = &params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
            offset += (fan_in + 1) * fan_out;
            let next: Vec<A> = w
                .chunks_exact(fan_in)
                .zip(b)
                .map(|(row, &bias)| {
                    let mut z = acts[0] * row[0];
                    for i in 1..fan_in {
                        z = z + acts[i] * row[i];
                    }
                    let z = z + bias;
                    if l == last { z } else { z.tanh() }
                })
                .collect();
            acts = next;
        }
        acts[0]
    }

    /// Upper bound on the Lipschitz constant: product of Frobenius norms of the weight matrices.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut bound = 1.0;
        let mut offset = 0;
        for (fan_in, fan_out) in self.config.layer_shapes() {
            let w = &self.params[offset..offset + fan_in * fan_out];
            bound *= libm::sqrt(w.iter().map(|v| v * v).sum::<f64>());
            offset += (fan_in + 1) * fan_out;
        }
        bound
    }
}
