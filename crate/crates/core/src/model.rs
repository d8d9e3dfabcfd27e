//! The block compressed-sensing network: architecture descriptor, builder and
//! accessors for the learned sensing operator.
//!
//! Layer chain for a spec `(B, R, K, T)` with `M = floor(B²R)`:
//!
//! ```text
//! B² --identity--> M --relu--> B²T --relu--> ... (K times) --identity--> B²
//! ```
//!
//! Layer 0 is the sensing stage; its weight matrix is the `M × B²` sensing
//! matrix and its output (pre-activation, identity) is the measurement vector.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{network_forward, predict_batch, Activation, DenseLayer, ForwardCache};
use crate::{Error, Result};

/// Guards the floor against products like `100 * 0.29 = 28.999999999999996`.
const RATE_FLOOR_SLACK: f64 = 1e-9;

/// Architecture descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchSpec {
    /// Block side length `B` in pixels.
    pub block_size: usize,
    /// Sensing rate `R = M / B²`, strictly inside (0, 1).
    pub rate: f64,
    /// Number of ReLU reconstruction layers `K`.
    pub recon_layers: usize,
    /// Width multiplier `T` of the reconstruction layers (each is `B²T` wide).
    pub redundancy: usize,
    /// Keep the sensing bias frozen at zero so measurements are purely `Φx`.
    pub linear_sensing: bool,
}

impl ArchSpec {
    pub fn new(
        block_size: usize,
        rate: f64,
        recon_layers: usize,
        redundancy: usize,
    ) -> Result<Self> {
        let spec = ArchSpec {
            block_size,
            rate,
            recon_layers,
            redundancy,
            linear_sensing: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_linear_sensing(mut self, on: bool) -> Self {
        self.linear_sensing = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::InvalidSpec(format!(
                "block size must be >= 2, got {}",
                self.block_size
            )));
        }
        if self.recon_layers < 1 {
            return Err(Error::InvalidSpec(
                "at least one reconstruction layer is required".into(),
            ));
        }
        if self.redundancy < 1 {
            return Err(Error::InvalidSpec("redundancy must be >= 1".into()));
        }
        measurement_dim(self.block_size, self.rate)?;
        Ok(())
    }

    /// `B²`, the length of a column-stacked block.
    pub fn block_len(&self) -> usize {
        self.block_size * self.block_size
    }

    pub fn measurement_dim(&self) -> usize {
        measurement_dim(self.block_size, self.rate).expect("validated spec")
    }

    pub fn hidden_dim(&self) -> usize {
        self.block_len() * self.redundancy
    }

    /// `(in, out, activation)` for every layer, in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize, Activation)> {
        let n = self.block_len();
        let m = self.measurement_dim();
        let h = self.hidden_dim();
        let mut dims = vec![(n, m, Activation::Identity)];
        let mut prev = m;
        for _ in 0..self.recon_layers {
            dims.push((prev, h, Activation::Relu));
            prev = h;
        }
        dims.push((prev, n, Activation::Identity));
        dims
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "B={} R={} M={} K={} T={}",
            self.block_size,
            self.rate,
            measurement_dim(self.block_size, self.rate).unwrap_or(0),
            self.recon_layers,
            self.redundancy
        )?;
        if self.linear_sensing {
            f.write_str(" linear-sensing")?;
        }
        Ok(())
    }
}

/// Measurement dimension `M = floor(B²R)`, at least 1.
pub fn measurement_dim(block_size: usize, rate: f64) -> Result<usize> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "sensing rate must lie in (0, 1), got {rate}"
        )));
    }
    let n = (block_size * block_size) as f64;
    Ok(((n * rate + RATE_FLOOR_SLACK).floor() as usize).max(1))
}

/// Total number of weights and biases in the layer chain for `spec`.
pub fn param_count(spec: &ArchSpec) -> usize {
    spec.layer_dims().iter().map(|&(i, o, _)| i * o + o).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcsModel {
    spec: ArchSpec,
    layers: Vec<DenseLayer>,
}

impl BcsModel {
    /// Assembles a model from explicit layers, checking them against `spec`.
    pub fn from_layers(spec: ArchSpec, layers: Vec<DenseLayer>) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims();
        if dims.len() != layers.len() {
            return Err(Error::dims("model layer count", dims.len(), layers.len()));
        }
        for (layer, &(i, o, act)) in layers.iter().zip(&dims) {
            if layer.in_dim() != i || layer.out_dim() != o || layer.activation() != act {
                return Err(Error::InvalidSpec(format!(
                    "layer {}x{} {} does not match spec {} ({}x{} {})",
                    layer.in_dim(),
                    layer.out_dim(),
                    layer.activation(),
                    spec,
                    i,
                    o,
                    act
                )));
            }
        }
        if spec.linear_sensing && layers[0].bias().iter().any(|&b| b != 0.0) {
            return Err(Error::InvalidSpec(
                "linear sensing requires a zero sensing bias".into(),
            ));
        }
        Ok(BcsModel { spec, layers })
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    /// Number of scalars actually allocated across all layers.
    pub fn allocated_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// The `M × B²` sensing matrix, row-major.
    pub fn sensing_matrix(&self) -> &[f64] {
        self.layers[0].weights()
    }

    pub fn sensing_bias(&self) -> &[f64] {
        self.layers[0].bias()
    }

    pub fn sensing_layer(&self) -> &DenseLayer {
        &self.layers[0]
    }

    /// Layers 1.. (everything after the measurement).
    pub fn reconstruction_layers(&self) -> &[DenseLayer] {
        &self.layers[1..]
    }

    /// Full forward pass for one column-stacked block.
    pub fn forward(&self, block: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        network_forward(&self.layers, block)
    }

    /// Measurements for a row-major batch of blocks.
    pub fn sense_batch(&self, blocks: &[f64], batch: usize) -> Result<Vec<f64>> {
        predict_batch(&self.layers[..1], blocks, batch)
    }

    /// Reconstructed blocks for a row-major batch of measurement vectors.
    pub fn reconstruct_batch(&self, measurements: &[f64], batch: usize) -> Result<Vec<f64>> {
        predict_batch(&self.layers[1..], measurements, batch)
    }
}

/// Builds a freshly initialised model. All layers draw, in order, from one
/// generator seeded with `seed`.
pub fn build_model(spec: &ArchSpec, seed: u64) -> Result<BcsModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = spec
        .layer_dims()
        .into_iter()
        .map(|(i, o, act)| DenseLayer::init_with_rng(i, o, act, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    if spec.linear_sensing {
        layers[0].bias_mut().fill(0.0);
    }
    BcsModel::from_layers(*spec, layers)
}
