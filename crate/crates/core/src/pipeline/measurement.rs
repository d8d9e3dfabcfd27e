//! Per-block measurement vectors and their file container.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "BCSMEAS\0"
//! 8       4     format version, u32 LE (= 1)
//! 12      4     block size B, u32 LE
//! 16      8     sensing rate R, f64 LE
//! 24      4     measurement dimension M, u32 LE
//! 28      4     original width, u32 LE
//! 32      4     original height, u32 LE
//! 36      4     grid rows, u32 LE
//! 40      4     grid cols, u32 LE
//! 44      ...   rows*cols*M f64 LE, blocks in grid row-major order
//! ```

use std::fs;
use std::path::Path;

use crate::blocks::grid_extent;
use crate::codec::{put_f64s, put_u32, Reader};
use crate::model::measurement_dim;
use crate::{Error, Result};

pub const MEASUREMENT_MAGIC: &[u8; 8] = b"BCSMEAS\0";
pub const MEASUREMENT_VERSION: u32 = 1;
const HEADER_LEN: usize = 44;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    block_size: usize,
    rate: f64,
    measurement_dim: usize,
    width: usize,
    height: usize,
    grid_rows: usize,
    grid_cols: usize,
    data: Vec<f64>,
}

impl MeasurementSet {
    pub fn new(
        block_size: usize,
        rate: f64,
        width: usize,
        height: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if block_size < 2 || width == 0 || height == 0 {
            return Err(Error::Data(format!(
                "invalid measurement geometry: B={block_size}, {width}x{height}"
            )));
        }
        let m = measurement_dim(block_size, rate)?;
        let grid_rows = grid_extent(height, block_size);
        let grid_cols = grid_extent(width, block_size);
        let expected = grid_rows * grid_cols * m;
        if data.len() != expected {
            return Err(Error::dims("measurement payload", expected, data.len()));
        }
        Ok(MeasurementSet {
            block_size,
            rate,
            measurement_dim: m,
            width,
            height,
            grid_rows,
            grid_cols,
            data,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn measurement_dim(&self) -> usize {
        self.measurement_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    pub fn block_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn vector(&self, block: usize) -> &[f64] {
        let m = self.measurement_dim;
        &self.data[block * m..(block + 1) * m]
    }

    /// All measurement vectors as one row-major `(blocks, M)` buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn describe(&self) -> String {
        format!(
            "B={} R={} M={} image={}x{}",
            self.block_size, self.rate, self.measurement_dim, self.width, self.height
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 8);
        out.extend_from_slice(MEASUREMENT_MAGIC);
        put_u32(&mut out, MEASUREMENT_VERSION);
        put_u32(&mut out, self.block_size as u32);
        out.extend_from_slice(&self.rate.to_le_bytes());
        put_u32(&mut out, self.measurement_dim as u32);
        put_u32(&mut out, self.width as u32);
        put_u32(&mut out, self.height as u32);
        put_u32(&mut out, self.grid_rows as u32);
        put_u32(&mut out, self.grid_cols as u32);
        put_f64s(&mut out, &self.data);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r
            .take(8)
            .map_err(|_| Error::CorruptHeader("file too short for magic".into()))?;
        if magic != MEASUREMENT_MAGIC {
            return Err(Error::CorruptHeader(
                "bad magic, not a measurement file".into(),
            ));
        }
        let version = r.u32()?;
        if version != MEASUREMENT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                supported: MEASUREMENT_VERSION,
            });
        }
        let b = r.u32()? as usize;
        let rate = r.f64()?;
        let m = r.u32()? as usize;
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;

        let corrupt = |what: String| Error::CorruptHeader(what);
        if b < 2 || width == 0 || height == 0 {
            return Err(corrupt(format!("bad geometry B={b} {width}x{height}")));
        }
        let expected_m = measurement_dim(b, rate).map_err(|e| corrupt(e.to_string()))?;
        if m != expected_m {
            return Err(corrupt(format!("M={m} but floor(B²R) = {expected_m}")));
        }
        if rows != grid_extent(height, b) || cols != grid_extent(width, b) {
            return Err(corrupt(format!(
                "grid {rows}x{cols} inconsistent with {width}x{height} at B={b}"
            )));
        }
        let n = rows * cols * m;
        r.require(n * 8)?;
        let data = r.f64s(n)?;
        r.expect_end()?;
        Self::new(b, rate, width, height, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
