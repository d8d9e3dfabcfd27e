//! Non-overlapping block decomposition, column stacking and reassembly.
//!
//! Images are padded on the right and bottom to multiples of `B` by repeating
//! the last column / row, tiled into a row-major grid of `B × B` blocks, and
//! each block is flattened column by column: pixel `(r, c)` of the block lands
//! at index `c·B + r`.

use crate::image::GrayImage;
use crate::{Error, Result};

#[inline]
pub fn to_unit(pixel: u8) -> f64 {
    pixel as f64 / 255.0
}

/// Inverse of [`to_unit`]: scale by 255, round half away from zero, clamp.
#[inline]
pub fn to_pixel(value: f64) -> u8 {
    (value * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn to_unit_vec(pixels: &[u8]) -> Vec<f64> {
    pixels.iter().copied().map(to_unit).collect()
}

pub fn to_pixels(values: &[f64]) -> Vec<u8> {
    values.iter().copied().map(to_pixel).collect()
}

fn check_square(len: usize, block_size: usize) -> Result<()> {
    if len != block_size * block_size {
        return Err(Error::dims("block length", block_size * block_size, len));
    }
    Ok(())
}

/// Flattens a row-major `B × B` block into its column-stacked vector.
pub fn column_stack(block: &[f64], block_size: usize) -> Result<Vec<f64>> {
    check_square(block.len(), block_size)?;
    let b = block_size;
    let mut out = vec![0.0; b * b];
    for r in 0..b {
        for c in 0..b {
            out[c * b + r] = block[r * b + c];
        }
    }
    Ok(out)
}

/// Inverse of [`column_stack`]: returns the row-major `B × B` block.
pub fn unstack(vector: &[f64], block_size: usize) -> Result<Vec<f64>> {
    check_square(vector.len(), block_size)?;
    let b = block_size;
    let mut out = vec![0.0; b * b];
    for c in 0..b {
        for r in 0..b {
            out[r * b + c] = vector[c * b + r];
        }
    }
    Ok(out)
}

/// Column-stacked, unit-range blocks of one image plus the geometry needed to
/// put them back.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSet {
    block_size: usize,
    grid_rows: usize,
    grid_cols: usize,
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// `ceil(len / block)`.
pub fn grid_extent(len: usize, block_size: usize) -> usize {
    len.div_ceil(block_size)
}

impl BlockSet {
    /// `data` holds `grid_rows * grid_cols` consecutive column-stacked blocks
    /// in grid row-major order.
    pub fn new(block_size: usize, width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if block_size == 0 || width == 0 || height == 0 {
            return Err(Error::Data("block set geometry must be non-empty".into()));
        }
        let grid_rows = grid_extent(height, block_size);
        let grid_cols = grid_extent(width, block_size);
        let expected = grid_rows * grid_cols * block_size * block_size;
        if data.len() != expected {
            return Err(Error::dims("block set payload", expected, data.len()));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!("block value {v} outside [0, 1]")));
        }
        Ok(BlockSet {
            block_size,
            grid_rows,
            grid_cols,
            width,
            height,
            data,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    /// Dimensions of the image before padding.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All blocks as one row-major `(len, B²)` buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn block(&self, index: usize) -> &[f64] {
        let n = self.block_size * self.block_size;
        &self.data[index * n..(index + 1) * n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.block_size * self.block_size)
    }
}

/// Pads by edge replication and tiles `image` into column-stacked blocks.
pub fn extract_blocks(image: &GrayImage, block_size: usize) -> Result<BlockSet> {
    if block_size < 1 {
        return Err(Error::InvalidConfig("block size must be >= 1".into()));
    }
    let b = block_size;
    let (w, h) = (image.width(), image.height());
    let rows = grid_extent(h, b);
    let cols = grid_extent(w, b);
    let mut data = Vec::with_capacity(rows * cols * b * b);
    for gr in 0..rows {
        for gc in 0..cols {
            for c in 0..b {
                let x = (gc * b + c).min(w - 1);
                for r in 0..b {
                    let y = (gr * b + r).min(h - 1);
                    data.push(to_unit(image.get(y, x)));
                }
            }
        }
    }
    BlockSet::new(b, w, h, data)
}

/// Places every block back on the canvas, quantises to 8 bits and crops the
/// padding. No smoothing across block borders.
pub fn assemble_blocks(set: &BlockSet) -> Result<GrayImage> {
    let b = set.block_size;
    let (w, h) = (set.width, set.height);
    let mut pixels = vec![0u8; w * h];
    for (i, block) in set.iter().enumerate() {
        let (gr, gc) = (i / set.grid_cols, i % set.grid_cols);
        for c in 0..b {
            let x = gc * b + c;
            if x >= w {
                break;
            }
            for r in 0..b {
                let y = gr * b + r;
                if y >= h {
                    break;
                }
                pixels[y * w + x] = to_pixel(block[c * b + r]);
            }
        }
    }
    GrayImage::new(w, h, pixels)
}
