//! Laplacian edge map of the 92x92 test image, computed photonically and
//! compared with the exact digital convolution.
//!
//! Writes `edges_digital.pgm` and `edges_photonic.pgm` to the directory given
//! as the first argument (default: the system temp directory).

use std::path::PathBuf;

use tempocomp::io::{flower_path, read_pgm, resolve_data_dir, write_pgm};
use tempocomp::nn::{conv2d_photonic, laplacian_kernel, pearson, rescale_unit, ConvSpec};
use tempocomp::oracle::conv2d_digital;
use tempocomp::{EngineConfig, PhotonicEngine};

fn main() -> tempocomp::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let img = read_pgm(flower_path(&resolve_data_dir(None)))?;
    let spec = ConvSpec::same(laplacian_kernel())?;
    let reference = conv2d_digital(&img, &spec)?;

    for (name, engine) in [
        ("noiseless", PhotonicEngine::noiseless()),
        (
            "default noise",
            PhotonicEngine::calibrated(EngineConfig::default())?,
        ),
    ] {
        let fm = conv2d_photonic(&img, &spec, &engine)?;
        let r = pearson(fm.raw.as_slice().unwrap(), reference.as_slice().unwrap())?;
        println!("{name:>14}: pearson {r:.6}");
        if name == "default noise" {
            write_pgm(&fm.image, out.join("edges_photonic.pgm"))?;
        }
    }
    write_pgm(
        &rescale_unit(reference)?.image,
        out.join("edges_digital.pgm"),
    )?;
    println!("edge maps written to {}", out.display());
    Ok(())
}
