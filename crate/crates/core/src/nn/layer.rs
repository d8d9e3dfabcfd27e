//! Dense layer: `y = activation(W x + b)`.
//!
//! Weights are stored row-major with shape `(out_dim, in_dim)`.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gemm::{gemm, MatRef};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
        }
    }

    #[inline]
    pub(crate) fn apply_in_place(self, v: &mut [f64]) {
        if self == Activation::Relu {
            for x in v {
                // Written as a comparison so NaN stays NaN instead of becoming 0.
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
    }

    /// Multiplies `grad` by the activation derivative evaluated at `pre`.
    /// The ReLU derivative at exactly 0 is taken to be 0.
    #[inline]
    pub(crate) fn backprop_in_place(self, pre: &[f64], grad: &mut [f64]) {
        if self == Activation::Relu {
            for (g, &z) in grad.iter_mut().zip(pre) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::CorruptHeader(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

/// Elementwise `max(v_i, 0)`.
pub fn relu(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    Activation::Relu.apply_in_place(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    /// Builds a layer from explicit parameters, validating shapes and finiteness.
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidSpec("layer dims must be >= 1".into()));
        }
        if weights.len() != in_dim * out_dim {
            return Err(Error::dims(
                "layer weights",
                in_dim * out_dim,
                weights.len(),
            ));
        }
        if bias.len() != out_dim {
            return Err(Error::dims("layer bias", out_dim, bias.len()));
        }
        if !weights.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(Error::InvalidSpec("layer parameters must be finite".into()));
        }
        Ok(DenseLayer {
            in_dim,
            out_dim,
            activation,
            weights,
            bias,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Result<Self> {
        Self::new(
            in_dim,
            out_dim,
            vec![0.0; in_dim * out_dim],
            vec![0.0; out_dim],
            activation,
        )
    }

    /// Uniform `±1/sqrt(in_dim)` initialisation drawn from `rng`: all weights
    /// row-major first, then the bias.
    pub fn init_with_rng<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidSpec("layer dims must be >= 1".into()));
        }
        let bound = 1.0 / (in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        let weights: Vec<f64> = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        let bias: Vec<f64> = (0..out_dim).map(|_| dist.sample(rng)).collect();
        Self::new(in_dim, out_dim, weights, bias, activation)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Mutable access to the weights. Callers are responsible for keeping
    /// them finite.
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Pre-activation for a row-major `(batch, in_dim)` input, written into
    /// `pre` as `(batch, out_dim)`.
    pub(crate) fn affine_into(&self, input: &[f64], batch: usize, pre: &mut [f64]) {
        debug_assert_eq!(input.len(), batch * self.in_dim);
        gemm(
            MatRef::row_major(input, batch, self.in_dim),
            MatRef::transposed(&self.weights, self.out_dim, self.in_dim),
            pre,
        );
        for row in pre[..batch * self.out_dim].chunks_exact_mut(self.out_dim) {
            for (z, b) in row.iter_mut().zip(&self.bias) {
                *z += b;
            }
        }
    }

    /// Batched forward pass without a cache.
    pub(crate) fn forward_batch(&self, input: &[f64], batch: usize) -> Vec<f64> {
        let mut out = vec![0.0; batch * self.out_dim];
        self.affine_into(input, batch, &mut out);
        self.activation.apply_in_place(&mut out);
        out
    }
}

/// Draws a fresh layer from a generator seeded with `seed`.
pub fn init_weights(
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    seed: u64,
) -> Result<DenseLayer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseLayer::init_with_rng(in_dim, out_dim, activation, &mut rng)
}

/// `activation(W·x + b)` for a single input vector.
pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != layer.in_dim {
        return Err(Error::dims("dense_forward input", layer.in_dim, x.len()));
    }
    Ok(layer.forward_batch(x, 1))
}
