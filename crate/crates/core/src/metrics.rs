//! PSNR and SSIM on 8-bit grayscale images, and the per-corpus report.
//!
//! SSIM follows the original Wang et al. formulation: an 11×11 Gaussian
//! window with σ = 1.5 (normalised to unit sum), K1 = 0.01, K2 = 0.03,
//! L = 255, evaluated at every window position that fits entirely inside the
//! image, then averaged.

use serde_json::{json, Value};

use crate::image::GrayImage;
use crate::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Data(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean squared error over 8-bit pixel values.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_dims(a, b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

/// `10·log10(255² / MSE)` in dB; `+inf` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / m).log10())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut g = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Valid-mode separable filtering of a `w × h` plane with `taps` in both axes.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        let dst = &mut rows[y * ow..(y + 1) * ow];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = taps.iter().zip(&src[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM. Both images must be at least 11×11.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Data(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let taps = gaussian_taps();
    let x: Vec<f64> = a.pixels().iter().map(|&p| p as f64).collect();
    let y: Vec<f64> = b.pixels().iter().map(|&p| p as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let sxx = e_xx[i] - mx * mx;
        let syy = e_yy[i] - my * my;
        let sxy = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
            / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageQuality {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

/// Per-image PSNR/SSIM plus arithmetic means. PSNR is measured on the 8-bit
/// quantised reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub images: Vec<ImageQuality>,
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

fn json_number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("nan")
    }
}

impl QualityReport {
    pub fn new(images: Vec<ImageQuality>) -> Self {
        QualityReport { images }
    }

    pub fn mean_psnr(&self) -> f64 {
        if self.images.is_empty() {
            return f64::NAN;
        }
        self.images.iter().map(|r| r.psnr).sum::<f64>() / self.images.len() as f64
    }

    pub fn mean_ssim(&self) -> f64 {
        if self.images.is_empty() {
            return f64::NAN;
        }
        self.images.iter().map(|r| r.ssim).sum::<f64>() / self.images.len() as f64
    }

    /// Comma-separated table: header `image,psnr_db,ssim`, one row per image,
    /// then an `average` row. PSNR has 4 decimals (`inf` for exact
    /// reconstructions), SSIM 6.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,psnr_db,ssim\n");
        for r in &self.images {
            out.push_str(&format!("{},{},{:.6}\n", r.name, fmt_psnr(r.psnr), r.ssim));
        }
        out.push_str(&format!(
            "average,{},{:.6}\n",
            fmt_psnr(self.mean_psnr()),
            self.mean_ssim()
        ));
        out
    }

    /// JSON object with full-precision values; non-finite PSNR becomes `"inf"`.
    pub fn to_json(&self) -> Value {
        json!({
            "psnr_domain": "quantized-8bit",
            "images": self.images.iter().map(|r| json!({
                "name": r.name,
                "psnr_db": json_number(r.psnr),
                "ssim": json_number(r.ssim),
            })).collect::<Vec<_>>(),
            "average": {
                "psnr_db": json_number(self.mean_psnr()),
                "ssim": json_number(self.mean_ssim()),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        GrayImage::from_fn(w, h, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 56) as u8
        })
        .unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = GrayImage::filled(8, 8, 255).unwrap();
        let b = GrayImage::filled(8, 8, 0).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
        let c = GrayImage::filled(8, 8, 100).unwrap();
        let d = GrayImage::filled(8, 8, 110).unwrap();
        let expected = 10.0 * (65025.0f64 / 100.0).log10();
        assert!((psnr(&c, &d).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 28.1308).abs() < 1e-4);
        assert!(psnr(&a, &GrayImage::filled(8, 9, 0).unwrap()).is_err());
    }

    #[test]
    fn ssim_identity_and_constants() {
        let x = noise(32, 20, 1);
        assert_eq!(ssim(&x, &x).unwrap(), 1.0);
        let a = GrayImage::filled(16, 16, 100).unwrap();
        let b = GrayImage::filled(16, 16, 110).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = (2.0 * 100.0 * 110.0 + c1) / (100.0f64.powi(2) + 110.0f64.powi(2) + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_size_checks() {
        let small = GrayImage::filled(10, 30, 1).unwrap();
        assert!(ssim(&small, &small).is_err());
        let a = GrayImage::filled(11, 11, 1).unwrap();
        let b = GrayImage::filled(12, 11, 1).unwrap();
        assert!(ssim(&a, &b).is_err());
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_is_normalised_and_symmetric() {
        let g = gaussian_taps();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..SSIM_WINDOW {
            assert_eq!(g[i], g[SSIM_WINDOW - 1 - i]);
        }
    }

    #[test]
    fn separable_filter_matches_direct_window() {
        let img = noise(15, 13, 9);
        let x: Vec<f64> = img.pixels().iter().map(|&p| p as f64).collect();
        let g = gaussian_taps();
        let out = filter_valid(&x, 15, 13, &g);
        for oy in 0..3 {
            for ox in 0..5 {
                let mut direct = 0.0;
                for i in 0..11 {
                    for j in 0..11 {
                        direct += g[i] * g[j] * x[(oy + i) * 15 + ox + j];
                    }
                }
                assert!((out[oy * 5 + ox] - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn report_formats() {
        let report = QualityReport::new(vec![
            ImageQuality {
                name: "a".into(),
                psnr: 30.0,
                ssim: 0.9,
            },
            ImageQuality {
                name: "b".into(),
                psnr: 20.0,
                ssim: 0.7,
            },
        ]);
        assert_eq!(report.mean_psnr(), 25.0);
        assert!((report.mean_ssim() - 0.8).abs() < 1e-15);
        assert_eq!(
            report.to_csv(),
            "image,psnr_db,ssim\na,30.0000,0.900000\nb,20.0000,0.700000\naverage,25.0000,0.800000\n"
        );
        let j = report.to_json();
        assert_eq!(j["images"][1]["name"], "b");
        assert_eq!(j["average"]["psnr_db"], 25.0);
        let inf = QualityReport::new(vec![ImageQuality {
            name: "x".into(),
            psnr: f64::INFINITY,
            ssim: 1.0,
        }]);
        assert!(inf.to_csv().contains("x,inf,1.000000"));
        assert_eq!(inf.to_json()["images"][0]["psnr_db"], "inf");
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(seed in any::<u64>(), w in 11usize..24, h in 11usize..24) {
            let a = noise(w, h, seed);
            let b = noise(w, h, seed ^ 0x5555);
            let s_ab = ssim(&a, &b).unwrap();
            prop_assert_eq!(s_ab, ssim(&b, &a).unwrap());
            prop_assert!((-1.0..1.0).contains(&s_ab));
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }

        #[test]
        fn single_pixel_change_drops_ssim(seed in any::<u64>(), idx in 0usize..400) {
            let a = noise(20, 20, seed);
            let mut px = a.pixels().to_vec();
            px[idx] = px[idx].wrapping_add(1);
            let b = GrayImage::new(20, 20, px).unwrap();
            let s = ssim(&a, &b).unwrap();
            prop_assert!(s < 1.0, "ssim {s}");
        }

        #[test]
        fn psnr_invariant_under_shared_permutation(seed in any::<u64>(), rot in 1usize..99) {
            let a = noise(10, 10, seed);
            let b = noise(10, 10, seed.wrapping_add(3));
            let perm = |img: &GrayImage| {
                let mut p = img.pixels().to_vec();
                p.rotate_left(rot);
                GrayImage::new(10, 10, p).unwrap()
            };
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&perm(&a), &perm(&b)).unwrap());
        }
    }
}
