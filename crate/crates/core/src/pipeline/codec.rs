//! Sensing and reconstruction of whole images through a trained model.

use crate::blocks::{assemble_blocks, extract_blocks, BlockSet};
use crate::image::GrayImage;
use crate::model::BcsModel;
use crate::pipeline::MeasurementSet;
use crate::{Error, Result};

/// Blocks pushed through the network per matrix product.
const CHUNK_BLOCKS: usize = 1024;

/// Block-wise measurements `y_i = Φ x_i + b` (sensing layer only).
pub fn sense(model: &BcsModel, image: &GrayImage) -> Result<MeasurementSet> {
    let spec = model.spec();
    let blocks = extract_blocks(image, spec.block_size)?;
    let n = spec.block_len();
    let mut data = Vec::with_capacity(blocks.len() * spec.measurement_dim());
    for chunk in blocks.as_flat().chunks(CHUNK_BLOCKS * n) {
        data.extend(model.sense_batch(chunk, chunk.len() / n)?);
    }
    MeasurementSet::new(
        spec.block_size,
        spec.rate,
        image.width(),
        image.height(),
        data,
    )
}

fn check_compatible(model: &BcsModel, m: &MeasurementSet) -> Result<()> {
    let spec = model.spec();
    let same = spec.block_size == m.block_size()
        && spec.rate.to_bits() == m.rate().to_bits()
        && spec.measurement_dim() == m.measurement_dim();
    if !same {
        return Err(Error::SpecMismatch {
            model: spec.to_string(),
            measurements: m.describe(),
        });
    }
    Ok(())
}

/// Reconstructed (unquantised, clamped to [0, 1]) blocks for every measurement vector.
pub fn reconstruct_blocks(model: &BcsModel, m: &MeasurementSet) -> Result<BlockSet> {
    check_compatible(model, m)?;
    let dim = m.measurement_dim();
    let mut data = Vec::with_capacity(m.block_count() * model.spec().block_len());
    for chunk in m.as_flat().chunks(CHUNK_BLOCKS * dim) {
        data.extend(model.reconstruct_batch(chunk, chunk.len() / dim)?);
    }
    for v in &mut data {
        *v = v.clamp(0.0, 1.0);
    }
    BlockSet::new(m.block_size(), m.width(), m.height(), data)
}

/// Decodes measurements back into an 8-bit image of the original size.
pub fn reconstruct(model: &BcsModel, m: &MeasurementSet) -> Result<GrayImage> {
    assemble_blocks(&reconstruct_blocks(model, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ArchSpec};

    fn test_image(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |r, c| ((r * 7 + c * 11) % 256) as u8).unwrap()
    }

    #[test]
    fn sense_shapes() {
        let model = build_model(&ArchSpec::new(16, 0.25, 1, 1).unwrap(), 1).unwrap();
        let m = sense(&model, &test_image(512, 512)).unwrap();
        assert_eq!(m.block_count(), 1024);
        assert_eq!(m.measurement_dim(), 64);
        assert_eq!(m.as_flat().len(), 65_536);
        let out = reconstruct(&model, &m).unwrap();
        assert_eq!((out.width(), out.height()), (512, 512));
    }

    #[test]
    fn zero_image_linear_sensing_is_zero() {
        let spec = ArchSpec::new(4, 0.25, 1, 2)
            .unwrap()
            .with_linear_sensing(true);
        let model = build_model(&spec, 3).unwrap();
        let m = sense(&model, &GrayImage::filled(9, 6, 0).unwrap()).unwrap();
        assert!(m.as_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_sizes_keep_geometry() {
        let model = build_model(&ArchSpec::new(4, 0.5, 1, 2).unwrap(), 3).unwrap();
        let img = test_image(13, 6);
        let out = reconstruct(&model, &sense(&model, &img).unwrap()).unwrap();
        assert_eq!((out.width(), out.height()), (13, 6));
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let a = build_model(&ArchSpec::new(4, 0.5, 1, 2).unwrap(), 3).unwrap();
        let b = build_model(&ArchSpec::new(4, 0.25, 1, 2).unwrap(), 3).unwrap();
        let m = sense(&a, &test_image(8, 8)).unwrap();
        assert!(matches!(
            reconstruct(&b, &m),
            Err(Error::SpecMismatch { .. })
        ));
    }
}
