//! AdaGrad with a fixed learning rate.
//!
//! ```text
//! acc_i   += g_i^2
//! theta_i -= lr * g_i / (sqrt(acc_i) + eps)
//! ```

use super::layer::DenseLayer;
use super::network::Gradients;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState {
    learning_rate: f64,
    epsilon: f64,
    /// Squared-gradient accumulators, mirroring `Gradients` layout.
    accumulators: Gradients,
}

impl AdaGradState {
    pub fn new(layers: &[DenseLayer], learning_rate: f64) -> Result<Self> {
        Self::with_epsilon(layers, learning_rate, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(layers: &[DenseLayer], learning_rate: f64, epsilon: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(AdaGradState {
            learning_rate,
            epsilon,
            accumulators: Gradients::zeros_like(layers),
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn accumulators(&self) -> &Gradients {
        &self.accumulators
    }
}

#[inline]
fn update_slice(params: &mut [f64], grads: &[f64], acc: &mut [f64], lr: f64, eps: f64) {
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(acc.iter_mut()) {
        *a += g * g;
        *p -= lr * g / (a.sqrt() + eps);
    }
}

/// Applies one AdaGrad update to every layer. The step is all-or-nothing: a
/// non-finite gradient anywhere aborts before any parameter is touched.
pub fn adagrad_step(
    layers: &mut [DenseLayer],
    grads: &Gradients,
    state: &mut AdaGradState,
) -> Result<()> {
    let shapes_ok = grads.layers.len() == layers.len()
        && state.accumulators.layers.len() == layers.len()
        && layers
            .iter()
            .zip(&grads.layers)
            .zip(&state.accumulators.layers)
            .all(|((l, g), a)| {
                g.weights.len() == l.weights().len()
                    && g.bias.len() == l.bias().len()
                    && a.weights.len() == l.weights().len()
                    && a.bias.len() == l.bias().len()
            });
    if !shapes_ok {
        return Err(Error::InvalidConfig(
            "gradient / optimizer state shape does not match the network".into(),
        ));
    }
    for (li, g) in grads.layers.iter().enumerate() {
        if let Some(i) = g.weights.iter().chain(&g.bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                layer: li,
                index: i,
            });
        }
    }
    let (lr, eps) = (state.learning_rate, state.epsilon);
    for ((layer, g), acc) in layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.accumulators.layers)
    {
        update_slice(layer.weights_mut(), &g.weights, &mut acc.weights, lr, eps);
        update_slice(layer.bias_mut(), &g.bias, &mut acc.bias, lr, eps);
    }
    Ok(())
}
