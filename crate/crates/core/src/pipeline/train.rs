//! Mini-batch AdaGrad training of the sensing + reconstruction network as an
//! autoencoder: the target for every patch is the patch itself.

use std::path::PathBuf;
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::model::{build_model, ArchSpec, BcsModel};
use crate::model_io::{model_to_bytes, save_model};
use crate::nn::{
    adagrad_step, backward_into, forward_batch_into, predict_batch, AdaGradState, ForwardCache,
    Gradients,
};
use crate::patches::{load_image_dir, sample_patches, PatchDataset};
use crate::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.005;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_EPOCHS: usize = 100;
pub const DEFAULT_PATCH_COUNT: usize = 5_000_000;
pub const DEFAULT_SEED: u64 = 42;

/// Mixed into the run seed for patch sampling so that sampling and weight
/// initialisation do not share a random stream.
const PATCH_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub spec: ArchSpec,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patch_count: usize,
    /// Directory of PGM training images; required by [`train`].
    pub corpus: Option<PathBuf>,
    pub seed: u64,
    /// Save the model every `n` epochs to `checkpoint_path`.
    pub checkpoint_every: Option<usize>,
    pub checkpoint_path: Option<PathBuf>,
}

impl TrainConfig {
    pub fn new(spec: ArchSpec) -> Self {
        TrainConfig {
            spec,
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            patch_count: DEFAULT_PATCH_COUNT,
            corpus: None,
            seed: DEFAULT_SEED,
            checkpoint_every: None,
            checkpoint_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.patch_count == 0 {
            return bad("patch count must be >= 1".into());
        }
        if self.batch_size > self.patch_count {
            return bad(format!(
                "batch size {} exceeds patch count {}",
                self.batch_size, self.patch_count
            ));
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint cadence must be >= 1".into());
        }
        if self.checkpoint_every.is_some() && self.checkpoint_path.is_none() {
            return bad("checkpoint cadence given without a checkpoint path".into());
        }
        Ok(())
    }

    pub fn patch_seed(&self) -> u64 {
        self.seed ^ PATCH_SEED_SALT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Mean per-patch MSE (unit pixel scale) observed during each epoch.
    pub epoch_losses: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    /// SHA-256 of the serialised final model, lowercase hex.
    pub model_checksum: String,
}

impl TrainHistory {
    /// `epoch,mean_loss,seconds` rows followed by a `# sha256=` trailer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,seconds\n");
        for (i, (l, s)) in self
            .epoch_losses
            .iter()
            .zip(&self.epoch_seconds)
            .enumerate()
        {
            out.push_str(&format!("{},{:e},{:.3}\n", i + 1, l, s));
        }
        out.push_str(&format!("# sha256={}\n", self.model_checksum));
        out
    }
}

pub fn model_checksum(model: &BcsModel) -> String {
    let digest = Sha256::digest(model_to_bytes(model));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Mean per-patch MSE of the model's reconstructions over `data`.
pub fn dataset_mse(model: &BcsModel, data: &PatchDataset) -> Result<f64> {
    if data.block_size() != model.spec().block_size {
        return Err(Error::dims(
            "patch side",
            model.spec().block_size,
            data.block_size(),
        ));
    }
    let n = data.patch_len();
    let mut total = 0.0;
    for chunk in data.as_flat().chunks(512 * n) {
        let out = predict_batch(model.layers(), chunk, chunk.len() / n)?;
        total += out
            .iter()
            .zip(chunk)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>();
    }
    Ok(total / data.as_flat().len() as f64)
}

/// Samples the configured corpus and trains a fresh model on it.
pub fn train(config: &TrainConfig) -> Result<(BcsModel, TrainHistory)> {
    config.validate()?;
    let dir = config
        .corpus
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no corpus directory configured".into()))?;
    let images: Vec<_> = load_image_dir(dir)?
        .into_iter()
        .map(|(_, img)| img)
        .collect();
    let data = sample_patches(
        &images,
        config.patch_count,
        config.spec.block_size,
        config.patch_seed(),
    )?;
    train_on(config, &data)
}

/// Trains a freshly built model on `data` (ignores `config.patch_count` and
/// `config.corpus`).
pub fn train_on(config: &TrainConfig, data: &PatchDataset) -> Result<(BcsModel, TrainHistory)> {
    let model = build_model(&config.spec, config.seed)?;
    train_model(config, model, data)
}

/// Continues training `model` on `data` with a fresh optimizer state.
pub fn train_model(
    config: &TrainConfig,
    mut model: BcsModel,
    data: &PatchDataset,
) -> Result<(BcsModel, TrainHistory)> {
    let mut cfg = config.clone();
    cfg.patch_count = data.len().max(1);
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if data.block_size() != model.spec().block_size {
        return Err(Error::dims(
            "patch side",
            model.spec().block_size,
            data.block_size(),
        ));
    }

    let n = data.patch_len();
    let count = data.len();
    let mut state = AdaGradState::new(model.layers(), config.learning_rate)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);

    let mut order: Vec<usize> = (0..count).collect();
    let mut inputs = Vec::with_capacity(config.batch_size * n);
    let mut out_grad = Vec::with_capacity(config.batch_size * n);
    let mut cache = ForwardCache::default();
    let mut grads = Gradients::zeros_like(model.layers());
    let mut history = TrainHistory {
        epoch_losses: Vec::with_capacity(config.epochs),
        epoch_seconds: Vec::with_capacity(config.epochs),
        model_checksum: String::new(),
    };

    for epoch in 0..config.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (batch_idx, idx) in order.chunks(config.batch_size).enumerate() {
            let bs = idx.len();
            inputs.clear();
            for &i in idx {
                inputs.extend_from_slice(data.patch(i));
            }
            forward_batch_into(model.layers(), &inputs, bs, &mut cache)?;

            // loss = (1/bs) Σ_examples (1/n) Σ_pixels (out − in)²
            let scale = 2.0 / (n * bs) as f64;
            let mut batch_sq = 0.0;
            out_grad.clear();
            for (o, t) in cache.output().iter().zip(&inputs) {
                let d = o - t;
                batch_sq += d * d;
                out_grad.push(scale * d);
            }
            if !batch_sq.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_idx,
                });
            }
            loss_sum += batch_sq / n as f64;

            backward_into(model.layers(), &cache, &out_grad, &mut grads)?;
            if model.spec().linear_sensing {
                grads.layers[0].bias.fill(0.0);
            }
            adagrad_step(model.layers_mut(), &grads, &mut state).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_idx,
                },
                other => other,
            })?;
        }
        let mean = loss_sum / count as f64;
        let secs = started.elapsed().as_secs_f64();
        history.epoch_losses.push(mean);
        history.epoch_seconds.push(secs);
        info!(
            "epoch {}/{}: mean loss {mean:.6e} ({secs:.1}s)",
            epoch + 1,
            config.epochs
        );

        if let (Some(every), Some(path)) = (config.checkpoint_every, &config.checkpoint_path) {
            if (epoch + 1) % every == 0 {
                save_model(&model, path)?;
            }
        }
    }
    history.model_checksum = model_checksum(&model);
    Ok((model, history))
}
