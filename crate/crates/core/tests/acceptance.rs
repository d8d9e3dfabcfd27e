//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.
//!
//! Run a subset by passing name fragments:
//! `cargo test -p bcs-core --test acceptance -- overfit timing`.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use bcs_core::nn::network_forward;
use bcs_core::pipeline::{dataset_mse, TrainHistory};
use bcs_core::{
    assemble_blocks, build_model, evaluate, extract_blocks, load_image_dir, load_model,
    model_to_bytes, param_count, psnr, reconstruct, sample_patches, save_model, sense, ssim,
    time_reconstruction, train, train_on, ArchSpec, BcsModel, GrayImage, MeasurementSet,
    TrainConfig,
};
use common::{data_dir, gradient_check, overfit_image, overfit_patches};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn param_count_oracle() -> Outcome {
    let spec = ArchSpec::new(16, 0.1, 2, 8).map_err(|e| e.to_string())?;
    let want = 4_780_569;
    let counted = param_count(&spec);
    let built = build_model(&spec, 1)
        .map_err(|e| e.to_string())?
        .allocated_params();
    check(
        counted == want && built == want,
        format!("param_count={counted}, allocated={built}, expected {want}"),
    )
}

fn gradients() -> Outcome {
    let r = gradient_check(50, 2024);
    check(
        r.networks == 50 && r.checked > 0 && r.max_rel < 1e-5,
        format!(
            "{} networks, {} coordinates, {} near-kink skipped, max rel err {:.2e} (< 1e-5)",
            r.networks, r.checked, r.skipped_kinks, r.max_rel
        ),
    )
}

fn overfit() -> Outcome {
    let img = overfit_image();
    let data = overfit_patches(&img, 8);
    let mut cfg = TrainConfig::new(ArchSpec::new(8, 0.25, 1, 2).map_err(|e| e.to_string())?);
    cfg.learning_rate = 0.005;
    cfg.batch_size = 16;
    cfg.epochs = 500;
    cfg.patch_count = data.len();
    let started = Instant::now();
    let (model, _) = train_on(&cfg, &data).map_err(|e| e.to_string())?;
    let mse = dataset_mse(&model, &data).map_err(|e| e.to_string())?;
    let out = reconstruct(&model, &sense(&model, &img).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let p = psnr(&img, &out).map_err(|e| e.to_string())?;
    check(
        data.len() == 100 && mse < 1e-4 && p > 40.0,
        format!(
            "{} patches, 500 epochs in {:.1}s: training MSE {mse:.3e} (< 1e-4), image PSNR {p:.2} dB (> 40)",
            data.len(),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn desk_scale_training() -> Outcome {
    let err = |e: bcs_core::Error| e.to_string();
    let corpus: Vec<GrayImage> = load_image_dir(data_dir().join("train"))
        .map_err(err)?
        .into_iter()
        .map(|(_, i)| i)
        .collect();
    let tests = load_image_dir(data_dir().join("test")).map_err(err)?;
    if tests.len() != 10
        || tests
            .iter()
            .any(|(_, i)| (i.width(), i.height()) != (512, 512))
    {
        return Err("expected ten 512x512 test images".into());
    }
    let mut base = TrainConfig::new(ArchSpec::new(16, 0.25, 2, 8).map_err(err)?);
    base.patch_count = 100_000;
    base.epochs = 20;
    base.batch_size = 128;
    let data = sample_patches(&corpus, base.patch_count, 16, base.patch_seed()).map_err(err)?;

    let mut results = Vec::new();
    for rate in [0.25, 0.1] {
        let mut cfg = base.clone();
        cfg.spec = ArchSpec::new(16, rate, 2, 8).map_err(err)?;
        let started = Instant::now();
        let (model, history): (BcsModel, TrainHistory) = train_on(&cfg, &data).map_err(err)?;
        let report = evaluate(&model, &tests).map_err(err)?;
        eprintln!(
            "  R={rate}: {:.0}s, final loss {:.3e}, mean PSNR {:.2} dB, mean SSIM {:.4}",
            started.elapsed().as_secs_f64(),
            history.epoch_losses.last().copied().unwrap_or(f64::NAN),
            report.mean_psnr(),
            report.mean_ssim()
        );
        for row in &report.images {
            eprintln!("    {:<14} {:>7.2} dB  {:.4}", row.name, row.psnr, row.ssim);
        }
        results.push(report.mean_psnr());
    }
    let (p25, p10) = (results[0], results[1]);
    check(
        p25 > 26.0 && p25 > p10,
        format!(
            "100000 patches x 20 epochs, batch 128: R=0.25 {p25:.2} dB (> 26), R=0.1 {p10:.2} dB (< R=0.25)"
        ),
    )
}

fn metric_oracles() -> Outcome {
    let err = |e: bcs_core::Error| e.to_string();
    let a = GrayImage::filled(64, 64, 100).map_err(err)?;
    let b = GrayImage::filled(64, 64, 110).map_err(err)?;
    let p = psnr(&a, &b).map_err(err)?;
    let p_oracle = 10.0 * (255.0f64 * 255.0 / 100.0).log10();
    let s = ssim(&a, &b).map_err(err)?;
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let s_oracle =
        (2.0 * 100.0 * 110.0 + c1) * c2 / ((100.0f64.powi(2) + 110.0f64.powi(2) + c1) * c2);
    let cam = common::load_test("camera");
    let same = ssim(&cam, &cam).map_err(err)?;
    check(
        (p - 28.131).abs() <= 0.001
            && (p - p_oracle).abs() < 1e-9
            && (s - 0.99548).abs() <= 0.0005
            && (s - s_oracle).abs() < 1e-9
            && (same - 1.0).abs() <= 1e-9,
        format!("PSNR {p:.4} dB (oracle {p_oracle:.4}), SSIM {s:.5} (oracle {s_oracle:.5}), ssim(x,x) {same:.12}"),
    )
}

fn codec_round_trips() -> Outcome {
    let err = |e: bcs_core::Error| e.to_string();
    let tests = load_image_dir(data_dir().join("test")).map_err(err)?;
    let mut images = 0;
    for (name, img) in &tests {
        for b in [4, 8, 16] {
            if img.width() % b != 0 || img.height() % b != 0 {
                continue;
            }
            let back = assemble_blocks(&extract_blocks(img, b).map_err(err)?).map_err(err)?;
            if &back != img {
                return Err(format!("block round trip changed {name} at B={b}"));
            }
        }
        images += 1;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = build_model(&ArchSpec::new(16, 0.25, 2, 8).map_err(err)?, 42).map_err(err)?;
    let model_path = dir.path().join("m.bcsm");
    save_model(&model, &model_path).map_err(err)?;
    let loaded = load_model(&model_path).map_err(err)?;
    let model_ok = loaded == model
        && model_to_bytes(&loaded) == fs::read(&model_path).map_err(|e| e.to_string())?;

    let cam = common::load_test("camera");
    let m = sense(&model, &cam).map_err(err)?;
    let meas_path = dir.path().join("m.bcsmeas");
    m.save(&meas_path).map_err(err)?;
    let m2 = MeasurementSet::load(&meas_path).map_err(err)?;
    let meas_ok = m2 == m
        && m2
            .as_flat()
            .iter()
            .zip(m.as_flat())
            .all(|(a, b)| a.to_bits() == b.to_bits())
        && m2.to_bytes() == fs::read(&meas_path).map_err(|e| e.to_string())?;

    let blocks = extract_blocks(&cam, 16).map_err(err)?;
    let recon = model
        .reconstruct_batch(m.as_flat(), m.block_count())
        .map_err(err)?;
    let mut mismatched = 0;
    for i in 0..blocks.len() {
        let (full, _) = network_forward(model.layers(), blocks.block(i)).map_err(err)?;
        let got = &recon[i * 256..(i + 1) * 256];
        if got
            .iter()
            .zip(&full)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            mismatched += 1;
        }
    }
    check(
        model_ok && meas_ok && mismatched == 0,
        format!(
            "block identity on {images} images x B in {{4,8,16}}; model file bit-exact: {model_ok}; \
             measurement file bit-exact: {meas_ok}; composition mismatches: {mismatched}/{}",
            blocks.len()
        ),
    )
}

fn timing() -> Outcome {
    let err = |e: bcs_core::Error| e.to_string();
    let model = build_model(&ArchSpec::new(16, 0.25, 2, 8).map_err(err)?, 42).map_err(err)?;
    let cam = common::load_test("camera");
    let t = time_reconstruction(&model, &cam, 5).map_err(err)?;
    let median = t.median();
    check(
        median < 2.0,
        format!("512x512, B=16 R=0.25 K=2 T=8: median {median:.3}s over 5 runs (< 2s)"),
    )
}

fn determinism() -> Outcome {
    let err = |e: bcs_core::Error| e.to_string();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig::new(ArchSpec::new(8, 0.25, 1, 2).map_err(err)?);
    cfg.corpus = Some(data_dir().join("train"));
    cfg.patch_count = 100;
    cfg.epochs = 500;
    let mut files = Vec::new();
    for run in 0..2 {
        let (model, _) = train(&cfg).map_err(err)?;
        let path = dir.path().join(format!("run{run}.bcsm"));
        save_model(&model, &path).map_err(err)?;
        files.push(fs::read(&path).map_err(|e| e.to_string())?);
    }
    check(
        files[0] == files[1],
        format!(
            "two 500-epoch runs: {} vs {} bytes, identical: {}",
            files[0].len(),
            files[1].len(),
            files[0] == files[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("param-count", param_count_oracle),
        ("gradients", gradients),
        ("overfit", overfit),
        ("desk-training", desk_scale_training),
        ("metric-oracles", metric_oracles),
        ("codec-round-trips", codec_round_trips),
        ("timing", timing),
        ("determinism", determinism),
    ];
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
