//! Simulator for temporal photonic computing: vectors are encoded as
//! sequences of symbols on a laser carrier, multiplied element by element in
//! two cascaded Mach-Zehnder modulators, and summed by the charge a balanced
//! photodetector accumulates over the frame.
//!
//! The crate is organized bottom-up:
//!
//! - [`signal`]: sampled waveforms, symbol encoding and drive pre-distortion.
//! - [`devices`]: laser, modulators, coupler, attenuator, detector, noise.
//! - [`engine`]: the weighted-summation unit and its calibration.
//! - [`wdm`]: wavelength/spatial multiplexing of matrix products.
//! - [`nn`]: convolution, fully connected and sliding-window layers.
//! - [`oracle`]: exact digital references.
//! - [`io`]: IDX, PGM, CSV, waveform dumps, JSON run configuration.
//! - [`cli`]: the `tempocomp` command line.
//!
//! The `examples/` directory has one runnable program per capability:
//! `weighted_sum`, `sync_calibration`, `waveform_dump`, `edge_detection`,
//! `mnist_classification`, `sliding_window_detection`, `wdm_parallel` and
//! `throughput`.
//!
//! ```
//! use tempocomp::PhotonicEngine;
//!
//! let engine = PhotonicEngine::noiseless();
//! let y = engine.weighted_sum(&[0.2, 0.4, 0.6], &[1.0, -0.5, 0.25]).unwrap();
//! assert!((y - 0.15).abs() < 1e-9);
//! ```

pub mod cli;
pub mod devices;
pub mod engine;
pub mod error;
pub mod io;
pub mod nn;
pub mod oracle;
pub mod signal;
pub mod wdm;

pub use devices::{Fidelity, IntegratorMode, NoiseModel};
pub use engine::{calibrate, CalibrationResult, EngineConfig, PhotonicEngine};
pub use error::{Error, Result};
pub use signal::{EncodingScheme, ImageTensor, StreamRole, Waveform, WaveformKind};
pub use wdm::{execute_plan, plan_matmul, throughput_estimate, ChannelPlan};
