//! File formats and dataset access.

mod config;
mod dataset;
mod idx;
mod pgm;
mod tables;
mod waveform;

use std::path::Path;

use crate::error::{Error, Result};

/// Reads a whole input file; failures name the path.
pub(crate) fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub use config::{PathsConfig, RunConfig};
pub use dataset::{
    flower_path, load_idx_pair, load_mnist, resolve_data_dir, seeded_subset, MnistSplit,
    BUNDLE_HELD_OUT, DATA_DIR_ENV,
};
pub use idx::{parse_idx, read_idx, write_idx, IdxTensor};
pub use pgm::{encode_pgm, parse_pgm, read_pgm, write_pgm};
pub use tables::{
    decisions_to_csv, detector_from_csv, detector_to_csv, fcspec_from_csv, fcspec_to_csv,
    kernel_from_csv, kernel_to_csv, matrix_to_csv, read_detector, read_fcspec, write_fcspec,
    ConfusionMatrix,
};
pub use waveform::{decode_tcwf, encode_tcwf, read_tcwf, waveform_to_csv, write_tcwf};
