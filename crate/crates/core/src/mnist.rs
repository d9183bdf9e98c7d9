//! IDX-format MNIST ingestion.
//!
//! The four standard files (`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`,
//! `t10k-images-idx3-ubyte`, `t10k-labels-idx1-ubyte`) are read either raw or
//! gzip-compressed. Header integers are big-endian. Pixels stay at native 8-bit
//! intensity.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DIGIT_SIDE: usize = 28;
pub const DIGIT_PIXELS: usize = DIGIT_SIDE * DIGIT_SIDE;
pub const NUM_CLASSES: usize = 10;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Row-major 28×28 intensity grid.
pub type DigitPixels = [u8; DIGIT_PIXELS];

#[derive(Debug, Error)]
pub enum MnistError {
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },
    #[error("truncated file: header promises {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },
    #[error("unexpected image shape {rows}x{cols}, expected 28x28")]
    UnexpectedShape { rows: u32, cols: u32 },
    #[error("label {label} at index {index} is outside 0..=9")]
    LabelOutOfRange { index: usize, label: u8 },
    #[error("{images} images but {labels} labels")]
    LengthMismatch { images: usize, labels: usize },
    #[error("gzip decode failed: {0}")]
    Decompress(std::io::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitImage {
    pub pixels: Box<DigitPixels>,
    pub class_label: u8,
}

impl DigitImage {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * DIGIT_SIDE + col]
    }
}

#[derive(Debug, Clone, Default)]
pub struct DigitPool {
    images: Vec<DigitImage>,
    index_by_class: [Vec<usize>; NUM_CLASSES],
}

impl DigitPool {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[DigitImage] {
        &self.images
    }

    pub fn get(&self, index: usize) -> Option<&DigitImage> {
        self.images.get(index)
    }

    pub fn class_indices(&self, class: u8) -> &[usize] {
        &self.index_by_class[class as usize]
    }

    /// SHA-256 over the images and labels in IDX payload order. Recorded in
    /// dataset manifests so a regeneration can confirm it used the same digits.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for img in &self.images {
            hasher.update(&img.pixels[..]);
        }
        for img in &self.images {
            hasher.update([img.class_label]);
        }
        hex::encode(hasher.finalize())
    }
}

fn maybe_gunzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>, MnistError> {
    if bytes.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(MnistError::Decompress)?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, MnistError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(MnistError::TruncatedFile {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), MnistError> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(MnistError::BadMagic { found, expected });
    }
    Ok(())
}

/// Parses an IDX3 image file into 28×28 grids, in file order.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<DigitPixels>, MnistError> {
    let bytes = maybe_gunzip(bytes)?;
    check_magic(&bytes, IMAGES_MAGIC)?;
    let count = be_u32(&bytes, 4)? as usize;
    let rows = be_u32(&bytes, 8)?;
    let cols = be_u32(&bytes, 12)?;
    if rows as usize != DIGIT_SIDE || cols as usize != DIGIT_SIDE {
        return Err(MnistError::UnexpectedShape { rows, cols });
    }
    let expected = 16 + count * DIGIT_PIXELS;
    if bytes.len() < expected {
        return Err(MnistError::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[16..expected]
        .chunks_exact(DIGIT_PIXELS)
        .map(|chunk| {
            let mut px = [0u8; DIGIT_PIXELS];
            px.copy_from_slice(chunk);
            px
        })
        .collect())
}

/// Parses an IDX1 label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, MnistError> {
    let bytes = maybe_gunzip(bytes)?;
    check_magic(&bytes, LABELS_MAGIC)?;
    let count = be_u32(&bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(MnistError::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    let labels = bytes[8..expected].to_vec();
    if let Some((index, &label)) = labels
        .iter()
        .enumerate()
        .find(|(_, &l)| l as usize >= NUM_CLASSES)
    {
        return Err(MnistError::LabelOutOfRange { index, label });
    }
    Ok(labels)
}

pub fn encode_idx_images(images: &[DigitPixels]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * DIGIT_PIXELS);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(DIGIT_SIDE as u32).to_be_bytes());
    out.extend_from_slice(&(DIGIT_SIDE as u32).to_be_bytes());
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn build_pool(images: Vec<DigitPixels>, labels: Vec<u8>) -> Result<DigitPool, MnistError> {
    if images.len() != labels.len() {
        return Err(MnistError::LengthMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    let mut index_by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    let mut out = Vec::with_capacity(images.len());
    for (index, (pixels, label)) in images.into_iter().zip(labels).enumerate() {
        if label as usize >= NUM_CLASSES {
            return Err(MnistError::LabelOutOfRange { index, label });
        }
        index_by_class[label as usize].push(index);
        out.push(DigitImage {
            pixels: Box::new(pixels),
            class_label: label,
        });
    }
    Ok(DigitPool {
        images: out,
        index_by_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

impl MnistSplit {
    fn prefix(self) -> &'static str {
        match self {
            MnistSplit::Train => "train",
            MnistSplit::Test => "t10k",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MnistSplit::Train => "train",
            MnistSplit::Test => "test",
        }
    }
}

fn find_file(dir: &Path, stem: &str) -> Option<PathBuf> {
    // Both the canonical `-idx3-ubyte` and the `.idx3-ubyte` spellings float around.
    let dotted = stem.replacen("-idx", ".idx", 1);
    [
        stem.to_string(),
        format!("{stem}.gz"),
        dotted.clone(),
        format!("{dotted}.gz"),
    ]
    .into_iter()
    .map(|name| dir.join(name))
    .find(|p| p.is_file())
}

fn read_file(path: &Path) -> Result<Vec<u8>, MnistError> {
    std::fs::read(path).map_err(|source| MnistError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads one MNIST split from a directory holding the standard file names.
pub fn load_pool(dir: &Path, split: MnistSplit) -> Result<DigitPool, MnistError> {
    let images_stem = format!("{}-images-idx3-ubyte", split.prefix());
    let labels_stem = format!("{}-labels-idx1-ubyte", split.prefix());
    let missing = |stem: &str| MnistError::Io {
        path: dir.join(stem),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
    };
    let images_path = find_file(dir, &images_stem).ok_or_else(|| missing(&images_stem))?;
    let labels_path = find_file(dir, &labels_stem).ok_or_else(|| missing(&labels_stem))?;
    let images = parse_idx_images(&read_file(&images_path)?)?;
    let labels = parse_idx_labels(&read_file(&labels_path)?)?;
    build_pool(images, labels)
}
