//! Locating and checking the MNIST files. Nothing here downloads.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mothcore::data::{locate, Dataset, Split};
use sha2::{Digest, Sha256};

pub const DATA_DIR_ENV: &str = "MOTHCORE_DATA_DIR";

/// Canonical SHA-256 digests of the uncompressed IDX files, keyed by
/// (split prefix, kind, rank).
pub const DIGESTS: [(&str, &str, usize, &str); 4] = [
    ("train", "images", 3, "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db"),
    ("train", "labels", 1, "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5"),
    ("t10k", "images", 3, "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7"),
    ("t10k", "labels", 1, "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2"),
];

pub const FETCH_HINT: &str = "\
MNIST is not bundled and this tool never downloads it. Fetch the four files
  train-images-idx3-ubyte.gz train-labels-idx1-ubyte.gz
  t10k-images-idx3-ubyte.gz  t10k-labels-idx1-ubyte.gz
from a MNIST mirror (for example https://ossci-datasets.s3.amazonaws.com/mnist/),
gunzip them into one directory, and point MOTHCORE_DATA_DIR (or `data.dir` in
the config) at it.";

/// `explicit`, else `$MOTHCORE_DATA_DIR`.
pub fn data_dir(explicit: Option<&Path>) -> anyhow::Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => bail!("no MNIST directory: set {DATA_DIR_ENV} or `data.dir`\n{FETCH_HINT}"),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Checks that all four files exist and match their digests.
pub fn verify_dir(dir: &Path) -> anyhow::Result<()> {
    for (prefix, kind, rank, want) in DIGESTS {
        let path = locate(dir, prefix, kind, rank);
        if !path.is_file() {
            bail!("{} not found\n{FETCH_HINT}", path.display());
        }
        let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let got = sha256_hex(&bytes);
        if got != want {
            bail!("{} has SHA-256 {got}, expected {want}; the file is corrupt or not canonical MNIST\n{FETCH_HINT}", path.display());
        }
    }
    Ok(())
}

/// Both splits, optionally verified and truncated.
pub fn load_mnist(
    dir: &Path,
    verify: bool,
    train_limit: Option<usize>,
    test_limit: Option<usize>,
) -> anyhow::Result<(Dataset, Dataset)> {
    if !dir.is_dir() {
        bail!("MNIST directory {} does not exist\n{FETCH_HINT}", dir.display());
    }
    if verify {
        verify_dir(dir)?;
    }
    let load = |split, limit: Option<usize>| -> anyhow::Result<Dataset> {
        let d = Dataset::load_dir(dir, split).with_context(|| format!("loading MNIST from {}\n{FETCH_HINT}", dir.display()))?;
        Ok(match limit {
            Some(n) => d.truncated(n),
            None => d,
        })
    };
    Ok((load(Split::Train, train_limit)?, load(Split::Test, test_limit)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_strings() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn missing_directory_mentions_the_hint() {
        let err = load_mnist(Path::new("/nonexistent/mnist"), true, None, None).unwrap_err();
        assert!(format!("{err:#}").contains("MOTHCORE_DATA_DIR"));
    }
}
