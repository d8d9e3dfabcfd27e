//! Minimal dense network engine: forward, backprop, MSE and AdaGrad.

mod adagrad;
pub(crate) mod gemm;
mod layer;
mod loss;
mod network;

pub use adagrad::{adagrad_step, AdaGradState, DEFAULT_EPSILON};
pub use layer::{dense_forward, init_weights, relu, Activation, DenseLayer};
pub use loss::{mse_grad, mse_loss};
pub use network::{
    backward_into, forward_batch, forward_batch_into, network_backward, network_forward,
    predict_batch, ForwardCache, Gradients, LayerGrads,
};
