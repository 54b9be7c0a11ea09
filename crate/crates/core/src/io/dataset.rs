use std::env;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::idx::read_idx;
use crate::error::{Error, Result};
use crate::signal::{normalize_pixels, ImageTensor};

/// Environment variable naming the dataset directory.
pub const DATA_DIR_ENV: &str = "TEMPOCOMP_DATA_DIR";

/// Dataset directory: `explicit`, else `$TEMPOCOMP_DATA_DIR`, else the
/// `data/` directory shipped with the source tree.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = env::var_os(DATA_DIR_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// The shipped 92x92 test image.
pub fn flower_path(data_dir: &Path) -> PathBuf {
    data_dir.join("flower_92x92.pgm")
}

/// Labelled digits split into a training part and a held-out part.
#[derive(Debug, Clone)]
pub struct MnistSplit {
    pub train_images: Vec<ImageTensor>,
    pub train_labels: Vec<u8>,
    pub test_images: Vec<ImageTensor>,
    pub test_labels: Vec<u8>,
}

/// Digits reserved for testing when only the 10k bundle is available.
pub const BUNDLE_HELD_OUT: usize = 1000;

fn find(dir: &Path, stem: &str) -> Option<PathBuf> {
    [stem.to_string(), format!("{stem}.gz")]
        .into_iter()
        .map(|n| dir.join(n))
        .find(|p| p.exists())
}

/// Reads an image/label IDX pair into normalized images.
pub fn load_idx_pair(images: &Path, labels: &Path) -> Result<(Vec<ImageTensor>, Vec<u8>)> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    if img.dims.len() != 3 || lab.dims.len() != 1 {
        return Err(Error::Format(format!(
            "expected N x H x W images and N labels, got {:?} and {:?}",
            img.dims, lab.dims
        )));
    }
    let (n, h, w) = (img.dims[0], img.dims[1], img.dims[2]);
    if lab.dims[0] != n {
        return Err(Error::Data(format!(
            "{n} images but {} labels",
            lab.dims[0]
        )));
    }
    if let Some(bad) = lab.data.iter().find(|&&l| l > 9) {
        return Err(Error::Data(format!("label {bad} outside 0..9")));
    }
    let images = img
        .data
        .chunks_exact(h * w)
        .map(|c| normalize_pixels(c, h, w))
        .collect::<Result<Vec<_>>>()?;
    Ok((images, lab.data))
}

/// Loads MNIST from `dir`. The standard `train-*`/`t10k-*` files are used
/// when present; otherwise the 10k bundle in `dir/mnist/` is split into its
/// first 9000 digits for training and the last [`BUNDLE_HELD_OUT`] for tests.
pub fn load_mnist(dir: &Path) -> Result<MnistSplit> {
    let standard = (
        find(dir, "train-images-idx3-ubyte"),
        find(dir, "train-labels-idx1-ubyte"),
        find(dir, "t10k-images-idx3-ubyte"),
        find(dir, "t10k-labels-idx1-ubyte"),
    );
    if let (Some(ti), Some(tl), Some(vi), Some(vl)) = standard {
        let (train_images, train_labels) = load_idx_pair(&ti, &tl)?;
        let (test_images, test_labels) = load_idx_pair(&vi, &vl)?;
        return Ok(MnistSplit {
            train_images,
            train_labels,
            test_images,
            test_labels,
        });
    }
    let bundle = dir.join("mnist");
    let (Some(bi), Some(bl)) = (
        find(&bundle, "mnist10k-images-idx3-ubyte"),
        find(&bundle, "mnist10k-labels-idx1-ubyte"),
    ) else {
        return Err(Error::Data(format!(
            "no MNIST files under {} (set {DATA_DIR_ENV})",
            dir.display()
        )));
    };
    let (mut images, mut labels) = load_idx_pair(&bi, &bl)?;
    if images.len() <= BUNDLE_HELD_OUT {
        return Err(Error::Data(format!(
            "bundle has only {} digits",
            images.len()
        )));
    }
    let split = images.len() - BUNDLE_HELD_OUT;
    let test_images = images.split_off(split);
    let test_labels = labels.split_off(split);
    Ok(MnistSplit {
        train_images: images,
        train_labels: labels,
        test_images,
        test_labels,
    })
}

/// `n` distinct indices below `len`, drawn with `seed`.
pub fn seeded_subset(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > len {
        return Err(Error::Data(format!("cannot draw {n} of {len} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, len, n).into_vec())
}
