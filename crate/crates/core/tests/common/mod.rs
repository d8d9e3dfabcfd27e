#![allow(dead_code)]

use std::path::PathBuf;

use bcs_core::nn::{forward_batch, mse_grad, mse_loss, network_backward, Activation, DenseLayer};
use bcs_core::{extract_blocks, load_pgm, GrayImage, PatchDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// The 80x80 crop used for the overfit runs: exactly 100 blocks at B = 8.
pub fn overfit_image() -> GrayImage {
    load_pgm(data_dir().join("train/flower.pgm"))
        .unwrap()
        .crop(100, 100, 80, 80)
        .unwrap()
}

pub fn overfit_patches(image: &GrayImage, block_size: usize) -> PatchDataset {
    PatchDataset::from_block_set(&extract_blocks(image, block_size).unwrap(), "crop")
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradCheck {
    pub networks: usize,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub max_rel: f64,
}

fn random_network(rng: &mut ChaCha8Rng) -> Vec<DenseLayer> {
    loop {
        let depth = rng.gen_range(1..=4);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=16)).collect();
        let params: usize = dims.windows(2).map(|d| d[0] * d[1] + d[1]).sum();
        if params > 1000 {
            continue;
        }
        return (0..depth)
            .map(|i| {
                let act = if i + 1 == depth {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                let mut l = DenseLayer::init_with_rng(dims[i], dims[i + 1], act, rng).unwrap();
                for b in l.bias_mut() {
                    *b = rng.gen_range(-0.5..0.5);
                }
                l
            })
            .collect();
    }
}

fn loss_and_pattern(layers: &[DenseLayer], x: &[f64], t: &[f64], batch: usize) -> (f64, Vec<bool>) {
    let cache = forward_batch(layers, x, batch).unwrap();
    let pattern = (0..layers.len())
        .filter(|&l| layers[l].activation() == Activation::Relu)
        .flat_map(|l| {
            cache
                .pre_activation(l)
                .iter()
                .map(|&z| z > 0.0)
                .collect::<Vec<_>>()
        })
        .collect();
    (mse_loss(cache.output(), t).unwrap(), pattern)
}

/// Compares backprop against central differences on `count` random networks.
/// A coordinate is skipped when either probe flips a ReLU on or off, since
/// the loss is not differentiable across that kink.
pub fn gradient_check(count: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut report = GradCheck::default();
    for _ in 0..count {
        let mut layers = random_network(&mut rng);
        let batch = rng.gen_range(1..=4);
        let din = layers[0].in_dim();
        let dout = layers[layers.len() - 1].out_dim();
        let x: Vec<f64> = (0..batch * din).map(|_| rng.gen()).collect();
        let t: Vec<f64> = (0..batch * dout).map(|_| rng.gen()).collect();

        let cache = forward_batch(&layers, &x, batch).unwrap();
        let grads =
            network_backward(&layers, &cache, &mse_grad(cache.output(), &t).unwrap()).unwrap();
        let (_, base) = loss_and_pattern(&layers, &x, &t, batch);

        for l in 0..layers.len() {
            let nw = layers[l].weights().len();
            for k in 0..nw + layers[l].bias().len() {
                let analytic = if k < nw {
                    grads.layers[l].weights[k]
                } else {
                    grads.layers[l].bias[k - nw]
                };
                let mut probe = |delta: f64| {
                    let p = if k < nw {
                        &mut layers[l].weights_mut()[k]
                    } else {
                        &mut layers[l].bias_mut()[k - nw]
                    };
                    let orig = *p;
                    *p = orig + delta;
                    let out = loss_and_pattern(&layers, &x, &t, batch);
                    let p = if k < nw {
                        &mut layers[l].weights_mut()[k]
                    } else {
                        &mut layers[l].bias_mut()[k - nw]
                    };
                    *p = orig;
                    out
                };
                let (lp, pp) = probe(h);
                let (lm, pm) = probe(-h);
                if pp != base || pm != base {
                    report.skipped_kinks += 1;
                    continue;
                }
                let numeric = (lp - lm) / (2.0 * h);
                let scale = analytic.abs().max(numeric.abs()).max(1e-8);
                report.max_rel = report.max_rel.max((analytic - numeric).abs() / scale);
                report.checked += 1;
            }
        }
        report.networks += 1;
    }
    report
}

pub fn load_test(name: &str) -> GrayImage {
    load_pgm(data_dir().join(format!("test/{name}.pgm"))).unwrap()
}
