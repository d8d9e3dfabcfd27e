//! Block-based compressed sensing with a jointly learned sensing matrix and
//! non-linear reconstruction operator.
//!
//! A single fully-connected network maps a column-stacked `B × B` block to
//! `M = floor(B²R)` measurements (its first, linear layer, whose weights are
//! the sensing matrix) and back to `B²` pixels through `K` ReLU layers of
//! width `B²T`. Training treats it as an autoencoder with a hard measurement
//! bottleneck; at inference time the two halves run separately:
//!
//! ```no_run
//! use bcs_core::{build_model, load_pgm, reconstruct, sense, ArchSpec};
//!
//! # fn main() -> bcs_core::Result<()> {
//! let model = build_model(&ArchSpec::new(16, 0.25, 2, 8)?, 42)?;
//! let image = load_pgm("lena.pgm")?;
//! let measurements = sense(&model, &image)?;
//! let restored = reconstruct(&model, &measurements)?;
//! # Ok(()) }
//! ```

mod codec;
mod error;

pub mod blocks;
pub mod image;
pub mod metrics;
pub mod model;
pub mod model_io;
pub mod nn;
pub mod patches;
pub mod pipeline;

pub use blocks::{
    assemble_blocks, column_stack, extract_blocks, to_pixels, to_unit, unstack, BlockSet,
};
pub use error::{Error, Result};
pub use image::{load_pgm, read_pgm, save_pgm, write_pgm, GrayImage};
pub use metrics::{psnr, ssim, ImageQuality, QualityReport};
pub use model::{build_model, measurement_dim, param_count, ArchSpec, BcsModel};
pub use model_io::{
    load_model, model_from_bytes, model_to_bytes, read_model, save_model, write_model,
};
pub use patches::{load_image_dir, sample_patches, PatchDataset};
pub use pipeline::{
    evaluate, reconstruct, sense, sweep, time_reconstruction, train, train_on, MeasurementSet,
    SweepAxis, TrainConfig, TrainHistory,
};
