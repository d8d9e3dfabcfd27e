//! Training corpora: directories of PGM images and seeded random patch sampling.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{to_unit, BlockSet};
use crate::codec::{put_f64s, put_u32, put_u64, Reader};
use crate::image::{load_pgm, GrayImage};
use crate::{Error, Result};

pub const PATCH_MAGIC: &[u8; 8] = b"BCSPATCH";

/// Column-stacked unit-range patches of side `B`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDataset {
    block_size: usize,
    data: Vec<f64>,
    source: String,
    seed: Option<u64>,
}

impl PatchDataset {
    pub fn new(block_size: usize, data: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        let n = block_size * block_size;
        if n == 0 || data.len() % n != 0 {
            return Err(Error::Data(format!(
                "patch payload of {} values is not a whole number of {block_size}x{block_size} patches",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!("patch value {v} outside [0, 1]")));
        }
        Ok(PatchDataset {
            block_size,
            data,
            source: source.into(),
            seed: None,
        })
    }

    /// Uses the blocks of one image as the dataset.
    pub fn from_block_set(set: &BlockSet, source: impl Into<String>) -> Self {
        PatchDataset {
            block_size: set.block_size(),
            data: set.as_flat().to_vec(),
            source: source.into(),
            seed: None,
        }
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn patch_len(&self) -> usize {
        self.block_size * self.block_size
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.patch_len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let n = self.patch_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Flat cache file: magic, u64 count, u32 B, then count·B² f64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.data.len() * 8);
        out.extend_from_slice(PATCH_MAGIC);
        put_u64(&mut out, self.len() as u64);
        put_u32(&mut out, self.block_size as u32);
        put_f64s(&mut out, &self.data);
        out
    }

    pub fn from_bytes(bytes: &[u8], source: impl Into<String>) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8).ok() != Some(&PATCH_MAGIC[..]) {
            return Err(Error::CorruptHeader("bad magic, not a patch cache".into()));
        }
        let count = r.u64()? as usize;
        let b = r.u32()? as usize;
        let data = r.f64s(count * b * b)?;
        r.expect_end()?;
        Self::new(b, data, source)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path)?, path.display().to_string())
    }
}

/// Draws `count` column-stacked `B × B` patches. Each draw picks an image
/// uniformly, then a top-left corner uniformly inside it; draws may overlap.
/// Images smaller than `B × B` are skipped with a warning.
pub fn sample_patches(
    corpus: &[GrayImage],
    count: usize,
    block_size: usize,
    seed: u64,
) -> Result<PatchDataset> {
    if corpus.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    if block_size == 0 {
        return Err(Error::InvalidConfig("block size must be >= 1".into()));
    }
    let usable: Vec<&GrayImage> = corpus
        .iter()
        .enumerate()
        .filter_map(|(i, img)| {
            if img.width() >= block_size && img.height() >= block_size {
                Some(img)
            } else {
                warn!(
                    "skipping corpus image {i} ({}x{}): smaller than {block_size}x{block_size}",
                    img.width(),
                    img.height()
                );
                None
            }
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::Data(format!(
            "no corpus image is at least {block_size}x{block_size}"
        )));
    }

    let b = block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(count * b * b);
    for _ in 0..count {
        let img = usable[rng.gen_range(0..usable.len())];
        let top = rng.gen_range(0..=img.height() - b);
        let left = rng.gen_range(0..=img.width() - b);
        for c in 0..b {
            for r in 0..b {
                data.push(to_unit(img.get(top + r, left + c)));
            }
        }
    }
    Ok(PatchDataset {
        block_size,
        data,
        source: format!("{} images", usable.len()),
        seed: Some(seed),
    })
}

/// Every `*.pgm` file directly inside `dir`, sorted by file name.
pub fn list_pgm_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Data(format!("cannot read directory {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("no .pgm files in {}", dir.display())));
    }
    Ok(files)
}

/// Loads every PGM in `dir` (sorted by name) as `(file stem, image)`.
pub fn load_image_dir(dir: impl AsRef<Path>) -> Result<Vec<(String, GrayImage)>> {
    list_pgm_files(dir)?
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let img = load_pgm(&p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?;
            Ok((name, img))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::extract_blocks;

    fn gradient(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |r, c| ((r * 5 + c * 3) % 256) as u8).unwrap()
    }

    #[test]
    fn deterministic_and_shaped() {
        let corpus = vec![gradient(40, 30), gradient(64, 64)];
        let a = sample_patches(&corpus, 1000, 16, 5).unwrap();
        let b = sample_patches(&corpus, 1000, 16, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert_eq!(a.patch(999).len(), 256);
        assert!(a.as_flat().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(a, sample_patches(&corpus, 1000, 16, 6).unwrap());
    }

    #[test]
    fn single_exact_image_forces_every_patch() {
        let img = gradient(16, 16);
        let set = extract_blocks(&img, 16).unwrap();
        let ds = sample_patches(&[img], 20, 16, 1).unwrap();
        for i in 0..ds.len() {
            assert_eq!(ds.patch(i), set.block(0));
        }
    }

    #[test]
    fn undersized_images() {
        let small = gradient(8, 8);
        assert!(matches!(
            sample_patches(std::slice::from_ref(&small), 5, 16, 1),
            Err(Error::Data(_))
        ));
        let ds = sample_patches(&[small, gradient(16, 20)], 5, 16, 1).unwrap();
        assert_eq!(ds.len(), 5);
        assert!(sample_patches(&[], 5, 16, 1).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let ds = sample_patches(&[gradient(20, 20)], 7, 4, 3).unwrap();
        let back = PatchDataset::from_bytes(&ds.to_bytes(), "x").unwrap();
        assert_eq!(back.as_flat(), ds.as_flat());
        assert_eq!(back.block_size(), 4);
        let bytes = ds.to_bytes();
        assert!(matches!(
            PatchDataset::from_bytes(&bytes[..bytes.len() - 3], "x"),
            Err(Error::Truncated { .. })
        ));
    }
}
