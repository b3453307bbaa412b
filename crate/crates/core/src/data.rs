//! MNIST-style datasets and the IDX container format.
//!
//! An IDX file is a big-endian 32-bit magic number whose low byte is the
//! number of dimensions and whose third byte is the element type (`0x08` for
//! unsigned bytes), followed by one big-endian 32-bit size per dimension and the
//! raw row-major payload.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{path}: cannot read file: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic 0x{found:08x} at offset 0 (expected 0x{expected:08x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated at offset {offset}: needed {needed} more bytes, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{extra} trailing bytes after payload at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("count mismatch: {images} images but {labels} labels (size field at offset 4)")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {value} at offset {offset} is not a digit")]
    BadLabel { offset: usize, value: u8 },
}

/// Parsed IDX file of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

const HEADER_WORD: usize = 4;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, IdxError> {
    bytes
        .get(offset..offset + HEADER_WORD)
        .map(|b| u32::from_be_bytes(b.try_into().expect("four bytes")))
        .ok_or(IdxError::Truncated {
            offset,
            needed: HEADER_WORD,
            available: bytes.len().saturating_sub(offset),
        })
}

impl IdxArray {
    /// Parses `bytes`, requiring the given magic number.
    pub fn parse(bytes: &[u8], expected_magic: u32) -> Result<Self, IdxError> {
        let magic = read_u32(bytes, 0)?;
        if magic != expected_magic {
            return Err(IdxError::BadMagic {
                expected: expected_magic,
                found: magic,
            });
        }
        let ndim = (magic & 0xff) as usize;
        let mut dims = Vec::with_capacity(ndim);
        for k in 0..ndim {
            dims.push(read_u32(bytes, HEADER_WORD * (k + 1))? as usize);
        }
        let offset = HEADER_WORD * (ndim + 1);
        let len: usize = dims.iter().product();
        let available = bytes.len() - offset;
        if available < len {
            return Err(IdxError::Truncated {
                offset,
                needed: len,
                available,
            });
        }
        if available > len {
            return Err(IdxError::TrailingBytes {
                offset: offset + len,
                extra: available - len,
            });
        }
        Ok(Self {
            magic,
            dims,
            data: bytes[offset..].to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_WORD * (self.dims.len() + 1) + self.data.len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    pub fn header_len(&self) -> usize {
        HEADER_WORD * (self.dims.len() + 1)
    }
}

pub fn load_idx(path: &Path, expected_magic: u32) -> Result<IdxArray, IdxError> {
    let bytes = fs::read(path).map_err(|source| IdxError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    IdxArray::parse(&bytes, expected_magic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    /// Canonical file stem prefix: `train` or `t10k`.
    pub fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

/// Labelled byte images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub split: Split,
    pub rows: usize,
    pub cols: usize,
    images: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(split: Split, rows: usize, cols: usize, images: Vec<u8>, labels: Vec<u8>) -> Result<Self, IdxError> {
        let pixels = rows * cols;
        let count = images.len().checked_div(pixels).unwrap_or(0);
        if count * pixels != images.len() || count != labels.len() {
            return Err(IdxError::CountMismatch {
                images: count,
                labels: labels.len(),
            });
        }
        if let Some(k) = labels.iter().position(|&l| l > 9) {
            return Err(IdxError::BadLabel {
                offset: 8 + k,
                value: labels[k],
            });
        }
        Ok(Self {
            split,
            rows,
            cols,
            images,
            labels,
        })
    }

    pub fn from_idx(split: Split, images: IdxArray, labels: IdxArray) -> Result<Self, IdxError> {
        if images.dims.len() != 3 {
            return Err(IdxError::BadMagic {
                expected: IMAGES_MAGIC,
                found: images.magic,
            });
        }
        if images.dims[0] != labels.dims[0] {
            return Err(IdxError::CountMismatch {
                images: images.dims[0],
                labels: labels.dims[0],
            });
        }
        Self::new(split, images.dims[1], images.dims[2], images.data, labels.data)
    }

    /// Loads a paired images/labels file set.
    pub fn load(split: Split, images: &Path, labels: &Path) -> Result<Self, IdxError> {
        Self::from_idx(split, load_idx(images, IMAGES_MAGIC)?, load_idx(labels, LABELS_MAGIC)?)
    }

    /// Finds the split's files in `dir` under either canonical naming
    /// (`train-images-idx3-ubyte` or `train-images.idx3-ubyte`).
    pub fn load_dir(dir: &Path, split: Split) -> Result<Self, IdxError> {
        let images = locate(dir, split.prefix(), "images", 3);
        let labels = locate(dir, split.prefix(), "labels", 1);
        Self::load(split, &images, &labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let p = self.pixels();
        &self.images[i * p..(i + 1) * p]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// First `n` samples, for quick runs.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            split: self.split,
            rows: self.rows,
            cols: self.cols,
            images: self.images[..n * self.pixels()].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub fn images_idx(&self) -> IdxArray {
        IdxArray {
            magic: IMAGES_MAGIC,
            dims: vec![self.len(), self.rows, self.cols],
            data: self.images.clone(),
        }
    }

    pub fn labels_idx(&self) -> IdxArray {
        IdxArray {
            magic: LABELS_MAGIC,
            dims: vec![self.len()],
            data: self.labels.clone(),
        }
    }
}

/// Path of an IDX file in `dir`, preferring whichever canonical spelling exists.
pub fn locate(dir: &Path, prefix: &str, kind: &str, ndim: usize) -> PathBuf {
    let dashed = dir.join(format!("{prefix}-{kind}-idx{ndim}-ubyte"));
    if dashed.exists() {
        return dashed;
    }
    let dotted = dir.join(format!("{prefix}-{kind}.idx{ndim}-ubyte"));
    if dotted.exists() {
        dotted
    } else {
        dashed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(Split::Test, 2, 2, vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11], vec![3, 1, 9]).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let d = tiny();
        let img = d.images_idx().to_bytes();
        let lab = d.labels_idx().to_bytes();
        assert_eq!(&img[..4], &[0, 0, 8, 3]);
        let back = Dataset::from_idx(
            Split::Test,
            IdxArray::parse(&img, IMAGES_MAGIC).unwrap(),
            IdxArray::parse(&lab, LABELS_MAGIC).unwrap(),
        )
        .unwrap();
        assert_eq!(back, d);
        assert_eq!(back.images_idx().to_bytes(), img);
        assert_eq!(back.image(1), &[4, 5, 6, 7]);
        assert_eq!(back.label(2), 9);
    }

    #[test]
    fn zero_magic_is_rejected() {
        let mut bytes = tiny().images_idx().to_bytes();
        bytes[..4].copy_from_slice(&[0, 0, 0, 0]);
        assert!(matches!(
            IdxArray::parse(&bytes, IMAGES_MAGIC),
            Err(IdxError::BadMagic { found: 0, .. })
        ));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = tiny().images_idx().to_bytes();
        match IdxArray::parse(&bytes[..20], IMAGES_MAGIC) {
            Err(IdxError::Truncated { offset, needed, available }) => {
                assert_eq!((offset, needed, available), (16, 12, 4));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            IdxArray::parse(&bytes[..6], IMAGES_MAGIC),
            Err(IdxError::Truncated { offset: 4, .. })
        ));
    }

    #[test]
    fn paired_counts_must_match() {
        let d = tiny();
        let labels = IdxArray {
            magic: LABELS_MAGIC,
            dims: vec![2],
            data: vec![1, 2],
        };
        assert!(matches!(
            Dataset::from_idx(Split::Test, d.images_idx(), labels),
            Err(IdxError::CountMismatch { images: 3, labels: 2 })
        ));
    }

    #[test]
    fn labels_must_be_digits() {
        assert!(matches!(
            Dataset::new(Split::Train, 1, 1, vec![0, 0], vec![1, 12]),
            Err(IdxError::BadLabel { offset: 9, value: 12 })
        ));
    }
}
