//! 8-bit grayscale images and binary PGM (`P5`, maxval 255) I/O.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// `pixels` is row-major, `width * height` long.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Data(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::dims("image pixels", width * height, pixels.len()));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Sub-image with top-left corner `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::Data(format!(
                "crop {width}x{height} at ({row},{col}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        Self::from_fn(width, height, |r, c| self.get(row + r, col + c))
    }
}

struct HeaderScanner<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl HeaderScanner<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            match self.buf[self.pos] {
                b'#' => {
                    while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::UnsupportedFormat(format!(
                "missing {what} in PGM header"
            )));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat(format!("bad {what} in PGM header")))
    }
}

/// Parses a binary 8-bit PGM.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::UnsupportedFormat(
            "not a PGM file (bad magic)".into(),
        ));
    }
    match bytes[1] {
        b'5' => {}
        b'2' => {
            return Err(Error::UnsupportedFormat(
                "ASCII PGM (P2) is not supported".into(),
            ))
        }
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "unsupported netpbm variant P{}",
                other as char
            )))
        }
    }
    let mut s = HeaderScanner { buf: bytes, pos: 2 };
    let width = s.number("width")?;
    let height = s.number("height")?;
    let maxval = s.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval must be 255, got {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(s.pos) {
        Some(c) if c.is_ascii_whitespace() => s.pos += 1,
        _ => return Err(Error::UnsupportedFormat("malformed PGM header".into())),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::UnsupportedFormat("image dimensions overflow".into()))?;
    let raster = &bytes[s.pos..];
    if raster.len() < n {
        return Err(Error::Truncated {
            expected: s.pos + n,
            found: bytes.len(),
        });
    }
    GrayImage::new(width, height, raster[..n].to_vec())
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn read_pgm<R: Read>(mut src: R) -> Result<GrayImage> {
    let mut buf = Vec::new();
    src.read_to_end(&mut buf)?;
    decode_pgm(&buf)
}

pub fn write_pgm<W: Write>(image: &GrayImage, mut dst: W) -> Result<()> {
    dst.write_all(&encode_pgm(image))?;
    Ok(())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}
