//! Corpus evaluation, hyperparameter sweeps and inference timing.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::info;

use crate::image::GrayImage;
use crate::metrics::{psnr, ssim, ImageQuality, QualityReport};
use crate::model::{ArchSpec, BcsModel};
use crate::patches::{sample_patches, PatchDataset};
use crate::pipeline::{reconstruct, sense, train_on, TrainConfig};
use crate::{Error, Result};

/// Senses and reconstructs every image, scoring each against its original.
pub fn evaluate(model: &BcsModel, images: &[(String, GrayImage)]) -> Result<QualityReport> {
    let mut rows = Vec::with_capacity(images.len());
    for (name, img) in images {
        let recon = reconstruct(model, &sense(model, img)?)?;
        rows.push(ImageQuality {
            name: name.clone(),
            psnr: psnr(img, &recon)?,
            ssim: ssim(img, &recon)?,
        });
    }
    Ok(QualityReport::new(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    BlockSize,
    Redundancy,
    Layers,
    Rate,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::BlockSize => "block_size",
            SweepAxis::Redundancy => "redundancy",
            SweepAxis::Layers => "layers",
            SweepAxis::Rate => "rate",
        }
    }

    /// The base spec with this axis set to `value`.
    pub fn apply(self, base: &ArchSpec, value: f64) -> Result<ArchSpec> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{} values must be positive integers, got {v}",
                    self.as_str()
                )))
            }
        };
        let mut spec = *base;
        match self {
            SweepAxis::BlockSize => spec.block_size = as_count(value)?,
            SweepAxis::Redundancy => spec.redundancy = as_count(value)?,
            SweepAxis::Layers => spec.recon_layers = as_count(value)?,
            SweepAxis::Rate => spec.rate = value,
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block_size" | "block-size" => Ok(SweepAxis::BlockSize),
            "redundancy" => Ok(SweepAxis::Redundancy),
            "layers" => Ok(SweepAxis::Layers),
            "rate" => Ok(SweepAxis::Rate),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep axis `{other}` (block_size, redundancy, layers, rate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub spec: ArchSpec,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn csv_header(axis: SweepAxis) -> String {
        format!("{axis},mean_psnr_db,mean_ssim,final_train_loss\n")
    }

    pub fn csv_row(row: &SweepRow) -> String {
        format!(
            "{},{:.4},{:.6},{:e}\n",
            row.value, row.mean_psnr, row.mean_ssim, row.final_loss
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.axis);
        for r in &self.rows {
            out.push_str(&Self::csv_row(r));
        }
        out
    }
}

/// Trains and evaluates one model per value along `axis`. Every cell shares
/// the base seed and budget; cells with the same block size reuse one sampled
/// dataset. `on_row` sees each row as soon as it is finished, so a failure
/// part-way leaves the completed rows already emitted.
pub fn sweep(
    base: &TrainConfig,
    corpus: &[GrayImage],
    axis: SweepAxis,
    values: &[f64],
    test_images: &[(String, GrayImage)],
    mut on_row: impl FnMut(&SweepRow),
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one value".into(),
        ));
    }
    let specs = values
        .iter()
        .map(|&v| axis.apply(&base.spec, v))
        .collect::<Result<Vec<_>>>()?;

    let mut datasets: BTreeMap<usize, PatchDataset> = BTreeMap::new();
    let mut rows = Vec::with_capacity(values.len());
    for (&value, spec) in values.iter().zip(specs) {
        if let std::collections::btree_map::Entry::Vacant(slot) = datasets.entry(spec.block_size) {
            slot.insert(sample_patches(
                corpus,
                base.patch_count,
                spec.block_size,
                base.patch_seed(),
            )?);
        }
        let mut cfg = base.clone();
        cfg.spec = spec;
        info!("sweep {axis}={value}: training {spec}");
        let (model, history) = train_on(&cfg, &datasets[&spec.block_size])?;
        let report = evaluate(&model, test_images)?;
        let row = SweepRow {
            value,
            spec,
            mean_psnr: report.mean_psnr(),
            mean_ssim: report.mean_ssim(),
            final_loss: history.epoch_losses.last().copied().unwrap_or(f64::NAN),
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(SweepTable { axis, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    /// Wall-clock seconds of each sense + reconstruct run, in run order.
    pub samples: Vec<f64>,
}

impl Timing {
    /// Median; the mean of the two middle samples for an even count.
    pub fn median(&self) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        if n == 0 {
            return f64::NAN;
        }
        if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        }
    }
}

/// Times `repetitions` in-memory sense + reconstruct passes (block extraction
/// and assembly included, file I/O excluded).
pub fn time_reconstruction(
    model: &BcsModel,
    image: &GrayImage,
    repetitions: usize,
) -> Result<Timing> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let m = sense(model, image)?;
        let out = reconstruct(model, &m)?;
        samples.push(start.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok(Timing { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_model;

    fn img(seed: usize) -> GrayImage {
        GrayImage::from_fn(24, 24, |r, c| ((r * 13 + c * 3 + seed * 29) % 256) as u8).unwrap()
    }

    #[test]
    fn evaluate_rows_and_means() {
        let model = build_model(&ArchSpec::new(4, 0.5, 1, 2).unwrap(), 2).unwrap();
        let images = vec![("a".to_string(), img(0)), ("b".to_string(), img(1))];
        let r1 = evaluate(&model, &images).unwrap();
        let r2 = evaluate(&model, &images).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.images.len(), 2);
        let mean = (r1.images[0].psnr + r1.images[1].psnr) / 2.0;
        assert_eq!(r1.mean_psnr(), mean);
    }

    #[test]
    fn axis_parsing_and_apply() {
        let base = ArchSpec::new(8, 0.25, 2, 8).unwrap();
        assert_eq!(
            "redundancy".parse::<SweepAxis>().unwrap(),
            SweepAxis::Redundancy
        );
        assert!("depth".parse::<SweepAxis>().is_err());
        assert_eq!(
            SweepAxis::Redundancy.apply(&base, 4.0).unwrap().redundancy,
            4
        );
        assert_eq!(
            SweepAxis::Rate.apply(&base, 0.1).unwrap().measurement_dim(),
            6
        );
        assert!(SweepAxis::Layers.apply(&base, 1.5).is_err());
        assert!(SweepAxis::Rate.apply(&base, 1.5).is_err());
    }

    #[test]
    fn sweep_emits_one_row_per_value() {
        let mut base = TrainConfig::new(ArchSpec::new(4, 0.25, 1, 2).unwrap());
        base.epochs = 1;
        base.patch_count = 32;
        base.batch_size = 8;
        let corpus = vec![img(3), img(4)];
        let tests = vec![("t".to_string(), img(5))];
        let mut seen = 0;
        let table = sweep(
            &base,
            &corpus,
            SweepAxis::Redundancy,
            &[2.0, 4.0, 8.0],
            &tests,
            |_| seen += 1,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 3);
        assert_eq!(seen, 3);
        assert_eq!(table.to_csv().lines().count(), 4);
        assert_eq!(table.rows[2].spec.redundancy, 8);
    }

    #[test]
    fn single_value_sweep_equals_plain_evaluate() {
        let mut base = TrainConfig::new(ArchSpec::new(4, 0.25, 1, 2).unwrap());
        base.epochs = 2;
        base.patch_count = 32;
        base.batch_size = 8;
        let corpus = vec![img(3), img(4)];
        let tests = vec![("t".to_string(), img(5))];
        let table = sweep(&base, &corpus, SweepAxis::Layers, &[1.0], &tests, |_| {}).unwrap();
        let ds = sample_patches(&corpus, 32, 4, base.patch_seed()).unwrap();
        let (model, _) = train_on(&base, &ds).unwrap();
        let report = evaluate(&model, &tests).unwrap();
        assert_eq!(table.rows[0].mean_psnr, report.mean_psnr());
        assert_eq!(table.rows[0].mean_ssim, report.mean_ssim());
    }

    #[test]
    fn timing_median() {
        let t = Timing {
            samples: vec![3.0, 1.0, 2.0],
        };
        assert_eq!(t.median(), 2.0);
        let t = Timing {
            samples: vec![4.0, 1.0, 2.0, 3.0],
        };
        assert_eq!(t.median(), 2.5);
        let t = Timing { samples: vec![0.7] };
        assert_eq!(t.median(), 0.7);
        let model = build_model(&ArchSpec::new(4, 0.5, 1, 2).unwrap(), 2).unwrap();
        let timing = time_reconstruction(&model, &img(0), 3).unwrap();
        assert_eq!(timing.samples.len(), 3);
        assert!(time_reconstruction(&model, &img(0), 0).is_err());
    }
}
