//! Forward and backward passes through an ordered stack of [`DenseLayer`]s.
//!
//! Everything here is batched: a batch of `n` inputs is a row-major
//! `(n, in_dim)` buffer. The single-vector entry points are the `n = 1` case
//! and produce bit-identical results to the corresponding batch row.

use super::gemm::{gemm, MatRef};
use super::layer::DenseLayer;
use crate::{Error, Result};

/// Pre- and post-activation buffers for every layer, recorded by a forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    batch: usize,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Number of layers recorded.
    pub fn depth(&self) -> usize {
        self.pre.len()
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn pre_activation(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }

    pub fn post_activation(&self, layer: usize) -> &[f64] {
        &self.post[layer]
    }

    /// Output of the final layer.
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&self.input)
    }
}

/// Per-layer gradients with the same shapes as the layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(layers: &[DenseLayer]) -> Self {
        Gradients {
            layers: layers
                .iter()
                .map(|l| LayerGrads {
                    weights: vec![0.0; l.weights().len()],
                    bias: vec![0.0; l.bias().len()],
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weights
                .iter_mut()
                .chain(g.bias.iter_mut())
                .for_each(|v| *v *= factor);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.bias))
    }

    fn matches(&self, layers: &[DenseLayer]) -> bool {
        self.layers.len() == layers.len()
            && self.layers.iter().zip(layers).all(|(g, l)| {
                g.weights.len() == l.weights().len() && g.bias.len() == l.bias().len()
            })
    }
}

fn check_chain(layers: &[DenseLayer]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::InvalidSpec("network has no layers".into()));
    }
    for pair in layers.windows(2) {
        if pair[0].out_dim() != pair[1].in_dim() {
            return Err(Error::dims(
                "layer chain",
                pair[0].out_dim(),
                pair[1].in_dim(),
            ));
        }
    }
    Ok(())
}

/// Batched forward pass, reusing the buffers already held by `cache`.
pub fn forward_batch_into(
    layers: &[DenseLayer],
    inputs: &[f64],
    batch: usize,
    cache: &mut ForwardCache,
) -> Result<()> {
    check_chain(layers)?;
    let in_dim = layers[0].in_dim();
    if inputs.len() != batch * in_dim {
        return Err(Error::dims("network input", batch * in_dim, inputs.len()));
    }
    cache.batch = batch;
    cache.input.clear();
    cache.input.extend_from_slice(inputs);
    cache.pre.resize_with(layers.len(), Vec::new);
    cache.post.resize_with(layers.len(), Vec::new);
    for (i, layer) in layers.iter().enumerate() {
        let n = batch * layer.out_dim();
        let mut pre = std::mem::take(&mut cache.pre[i]);
        pre.resize(n, 0.0);
        {
            let input: &[f64] = if i == 0 {
                &cache.input
            } else {
                &cache.post[i - 1]
            };
            layer.affine_into(input, batch, &mut pre);
        }
        let post = &mut cache.post[i];
        post.clear();
        post.extend_from_slice(&pre);
        layer.activation().apply_in_place(post);
        cache.pre[i] = pre;
    }
    Ok(())
}

pub fn forward_batch(layers: &[DenseLayer], inputs: &[f64], batch: usize) -> Result<ForwardCache> {
    let mut cache = ForwardCache::default();
    forward_batch_into(layers, inputs, batch, &mut cache)?;
    Ok(cache)
}

/// Batched inference over a contiguous range of layers; no cache is kept.
pub fn predict_batch(layers: &[DenseLayer], inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
    check_chain(layers)?;
    let in_dim = layers[0].in_dim();
    if inputs.len() != batch * in_dim {
        return Err(Error::dims("network input", batch * in_dim, inputs.len()));
    }
    let mut current = layers[0].forward_batch(inputs, batch);
    for layer in &layers[1..] {
        current = layer.forward_batch(&current, batch);
    }
    Ok(current)
}

/// Single-vector forward pass returning the output and the full cache.
pub fn network_forward(layers: &[DenseLayer], x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let cache = forward_batch(layers, x, 1)?;
    Ok((cache.output().to_vec(), cache))
}

/// Accumulates into `grads` (overwriting) the gradient of a scalar loss whose
/// derivative w.r.t. the network output is `out_grad` (row-major
/// `(batch, out_dim)`). Gradients are summed over the batch.
pub fn backward_into(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    out_grad: &[f64],
    grads: &mut Gradients,
) -> Result<()> {
    check_chain(layers)?;
    let stale = || Error::InvalidConfig("forward cache does not match the network".into());
    if cache.depth() != layers.len() {
        return Err(stale());
    }
    let batch = cache.batch;
    if cache.input.len() != batch * layers[0].in_dim() {
        return Err(stale());
    }
    for (l, layer) in layers.iter().enumerate() {
        if cache.pre[l].len() != batch * layer.out_dim() {
            return Err(stale());
        }
    }
    let out_dim = layers[layers.len() - 1].out_dim();
    if out_grad.len() != batch * out_dim {
        return Err(Error::dims(
            "output gradient",
            batch * out_dim,
            out_grad.len(),
        ));
    }
    if !grads.matches(layers) {
        *grads = Gradients::zeros_like(layers);
    }

    let mut delta = out_grad.to_vec();
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
        layer
            .activation()
            .backprop_in_place(&cache.pre[l], &mut delta);

        let input: &[f64] = if l == 0 {
            &cache.input
        } else {
            &cache.post[l - 1]
        };
        let g = &mut grads.layers[l];
        // dW = delta^T · input, shape (out, in)
        gemm(
            MatRef::transposed(&delta, batch, out_dim),
            MatRef::row_major(input, batch, in_dim),
            &mut g.weights,
        );
        g.bias.fill(0.0);
        for row in delta.chunks_exact(out_dim) {
            for (b, d) in g.bias.iter_mut().zip(row) {
                *b += d;
            }
        }

        if l > 0 {
            // delta_prev = delta · W, shape (batch, in)
            let mut prev = vec![0.0; batch * in_dim];
            gemm(
                MatRef::row_major(&delta, batch, out_dim),
                MatRef::row_major(layer.weights(), out_dim, in_dim),
                &mut prev,
            );
            delta = prev;
        }
    }
    Ok(())
}

/// Exact gradients of the loss w.r.t. every weight and bias.
pub fn network_backward(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    out_grad: &[f64],
) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(layers);
    backward_into(layers, cache, out_grad, &mut grads)?;
    Ok(grads)
}
