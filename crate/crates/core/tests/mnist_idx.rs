//! Round trip of the real MNIST files. Needs `MOTHCORE_DATA_DIR`.

use std::path::PathBuf;

use mothcore::data::{locate, Dataset, IdxArray, Split};

const IMAGES_MAGIC: u32 = 0x0803;
const LABELS_MAGIC: u32 = 0x0801;

fn data_dir() -> PathBuf {
    let dir = PathBuf::from(std::env::var_os("MOTHCORE_DATA_DIR").expect("MOTHCORE_DATA_DIR is set by .cargo/config.toml"));
    assert!(dir.is_dir(), "{} is missing; see the README for fetching MNIST", dir.display());
    dir
}

#[test]
fn files_round_trip_bit_exactly() {
    let dir = data_dir();
    for (prefix, count) in [("train", 60_000), ("t10k", 10_000)] {
        for (kind, rank, magic) in [("images", 3, IMAGES_MAGIC), ("labels", 1, LABELS_MAGIC)] {
            let bytes = std::fs::read(locate(&dir, prefix, kind, rank)).unwrap();
            let idx = IdxArray::parse(&bytes, magic).unwrap();
            assert_eq!(idx.dims[0], count);
            if rank == 3 {
                assert_eq!(&idx.dims[1..], &[28, 28]);
            }
            assert_eq!(idx.to_bytes(), bytes, "{prefix}-{kind}");
        }
    }
}

#[test]
fn datasets_rebuild_their_files() {
    let dir = data_dir();
    for split in [Split::Train, Split::Test] {
        let d = Dataset::load_dir(&dir, split).unwrap();
        let images = std::fs::read(locate(&dir, split.prefix(), "images", 3)).unwrap();
        let labels = std::fs::read(locate(&dir, split.prefix(), "labels", 1)).unwrap();
        assert_eq!(d.images_idx().to_bytes(), images);
        assert_eq!(d.labels_idx().to_bytes(), labels);
        let mut per_class = [0usize; 10];
        for &l in d.labels() {
            per_class[l as usize] += 1;
        }
        assert!(per_class.iter().all(|&c| c > d.len() / 20));
    }
}

#[test]
fn known_first_labels() {
    let d = Dataset::load_dir(&data_dir(), Split::Train).unwrap();
    assert_eq!(&d.labels()[..8], &[5, 0, 4, 1, 9, 2, 1, 3]);
    let t = Dataset::load_dir(&data_dir(), Split::Test).unwrap();
    assert_eq!(&t.labels()[..8], &[7, 2, 1, 0, 4, 1, 4, 9]);
}
