//! Intensity-domain device models: laser, data and weight modulators, 3-dB
//! coupler, attenuator, balanced photodetector with its temporal integrator,
//! and the noise sources that perturb them.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Waveform, WaveformKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserParams {
    /// Optical power launched into the data modulator, watts.
    pub intensity_in: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
}

impl Default for LaserParams {
    fn default() -> Self {
        Self {
            intensity_in: 1e-3,
            wavelength: 1550e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasPoint {
    /// Minimum transmission; used for the data modulator.
    NullPoint,
    /// Half transmission; used for the weight modulator.
    QuadraturePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MzmParams {
    /// Half-wave voltage, volts.
    #[serde(default = "default_v_pi")]
    pub v_pi: f64,
    pub bias: BiasPoint,
    /// Static phase offset from the ideal bias point, radians.
    #[serde(default)]
    pub bias_error: f64,
}

fn default_v_pi() -> f64 {
    3.5
}

impl MzmParams {
    pub fn data_default() -> Self {
        Self {
            v_pi: default_v_pi(),
            bias: BiasPoint::NullPoint,
            bias_error: 0.0,
        }
    }

    pub fn weight_default() -> Self {
        Self {
            v_pi: default_v_pi(),
            bias: BiasPoint::QuadraturePoint,
            bias_error: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoaParams {
    pub alpha: f64,
}

impl Default for VoaParams {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMode {
    /// Perfect charge accumulation, reset at every frame start.
    IdealGated,
    /// First-order RC response with time constant `1 / (2 pi bandwidth)`.
    LeakyRc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpdParams {
    /// A/W.
    pub responsivity: f64,
    /// Ohms.
    pub parasitic_resistance: f64,
    /// Hz.
    pub bandwidth: f64,
    pub integrator_mode: IntegratorMode,
}

impl Default for BpdParams {
    fn default() -> Self {
        Self {
            responsivity: 1.0,
            parasitic_resistance: 10e3,
            bandwidth: 150e6,
            integrator_mode: IntegratorMode::IdealGated,
        }
    }
}

impl BpdParams {
    /// Integrator time constant `R C = 1 / (2 pi B)`.
    pub fn time_constant(&self) -> f64 {
        1.0 / (2.0 * PI * self.bandwidth)
    }

    /// Effective integrating capacitance, farads.
    pub fn capacitance(&self) -> f64 {
        self.time_constant() / self.parasitic_resistance
    }

    /// Current produced by a unit product (`M = 1`, `W = 1`) at `alpha = 1/2`.
    pub fn full_scale_current(&self, laser: &LaserParams) -> f64 {
        self.responsivity * laser.intensity_in / 4.0
    }
}

/// How faithfully the quadrature-biased weight modulator is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// First-order expansion of the sine transfer around quadrature.
    Linearized,
    /// Full sine transfer.
    Physical,
}

/// Stochastic impairments. Magnitudes are fitted defaults, not measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Random-walk step of each modulator's bias phase, rad per sqrt(symbol).
    pub bias_drift_std: f64,
    /// Additive white noise on the photocurrent, amperes.
    pub detector_noise_std: f64,
    /// Per-frame timing jitter between data and weight streams, samples.
    pub sync_jitter_std: f64,
    pub rng_seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        let fs = BpdParams::default().full_scale_current(&LaserParams::default());
        Self {
            bias_drift_std: DEFAULT_BIAS_DRIFT_STD,
            detector_noise_std: DEFAULT_DETECTOR_NOISE_FRACTION * fs,
            sync_jitter_std: 0.0,
            rng_seed: 0,
        }
    }
}

/// Fitted so that the photonic MNIST pipeline loses a few points of accuracy
/// against its digital twin.
pub const DEFAULT_BIAS_DRIFT_STD: f64 = 7e-4;
/// Detector noise as a fraction of the full-scale photocurrent.
pub const DEFAULT_DETECTOR_NOISE_FRACTION: f64 = 0.004;

impl NoiseModel {
    /// All impairments switched off.
    pub fn disabled() -> Self {
        Self {
            bias_drift_std: 0.0,
            detector_noise_std: 0.0,
            sync_jitter_std: 0.0,
            rng_seed: 0,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.bias_drift_std == 0.0 && self.detector_noise_std == 0.0 && self.sync_jitter_std == 0.0
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Same magnitudes on an independent random stream identified by `key`.
    pub fn substream(&self, key: u64) -> Self {
        Self {
            rng_seed: mix_seed(self.rng_seed, key),
            ..*self
        }
    }

    pub(crate) fn rng(&self, purpose: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(self.rng_seed, purpose))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bias_drift_std", self.bias_drift_std),
            ("detector_noise_std", self.detector_noise_std),
            ("sync_jitter_std", self.sync_jitter_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over a combined seed and key.
pub(crate) fn mix_seed(seed: u64, key: u64) -> u64 {
    let mut z = seed
        ^ key
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const PURPOSE_DETECTOR: u64 = 0xD7;
pub(crate) const PURPOSE_DRIFT: u64 = 0xB1A5;

fn expect_kind(w: &Waveform, kind: WaveformKind, what: &str) -> Result<()> {
    if w.kind() != kind {
        return Err(Error::Config(format!(
            "{what} expects a {kind:?} waveform, got {:?}",
            w.kind()
        )));
    }
    Ok(())
}

fn check_phase_len(w: &Waveform, phase: &[f64]) -> Result<()> {
    if !phase.is_empty() && phase.len() != w.len() {
        return Err(Error::dim(format!(
            "{} phase samples for a {}-sample waveform",
            phase.len(),
            w.len()
        )));
    }
    Ok(())
}

/// Null-biased data modulator: `I_in sin^2(pi d / (2 v_pi) + bias_error / 2)`.
pub fn mzm_data_modulate(i_in: f64, drive: &Waveform, mzm: &MzmParams) -> Result<Waveform> {
    mzm_data_modulate_drifting(i_in, drive, mzm, &[])
}

/// [`mzm_data_modulate`] with an extra per-sample bias phase (empty slice
/// means none).
pub fn mzm_data_modulate_drifting(
    i_in: f64,
    drive: &Waveform,
    mzm: &MzmParams,
    phase: &[f64],
) -> Result<Waveform> {
    if mzm.bias != BiasPoint::NullPoint {
        return Err(Error::Config(
            "data modulator must be biased at the null point".into(),
        ));
    }
    expect_kind(drive, WaveformKind::DriveVoltage, "data modulator")?;
    check_phase_len(drive, phase)?;
    let k = PI / (2.0 * mzm.v_pi);
    let out = drive
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &d)| {
            let extra = phase.get(n).copied().unwrap_or(0.0);
            i_in * (k * d + 0.5 * (mzm.bias_error + extra)).sin().powi(2)
        })
        .collect();
    Ok(Waveform::from_parts(
        out,
        drive.sample_rate(),
        WaveformKind::OpticalIntensity,
    ))
}

/// 3-dB coupler: both outputs carry half the input intensity.
pub fn split_3db(w: &Waveform) -> (Waveform, Waveform) {
    let half: Vec<f64> = w.samples().iter().map(|&x| 0.5 * x).collect();
    let a = Waveform::from_parts(half.clone(), w.sample_rate(), w.kind());
    let b = Waveform::from_parts(half, w.sample_rate(), w.kind());
    (a, b)
}

/// Drive voltage that encodes a normalized weight `w` on the weight modulator.
///
/// Linearized mode (and Physical mode without predistortion) uses
/// `w v_pi / pi`; Physical mode with predistortion uses `(v_pi / pi) asin(w)`
/// so the sine transfer reproduces `w` exactly.
pub fn weight_drive(w: f64, v_pi: f64, fidelity: Fidelity, predistort: bool) -> f64 {
    match (fidelity, predistort) {
        (Fidelity::Physical, true) => v_pi / PI * w.clamp(-1.0, 1.0).asin(),
        _ => w * v_pi / PI,
    }
}

const LINEAR_RANGE_TOL: f64 = 1e-12;

/// Quadrature-biased weight modulator acting on the (already split) upper
/// path intensity `i`.
///
/// Linearized: `(i/2) (1 + pi w / v_pi)`. Physical: `(i/2) (1 + sin(pi w / v_pi + bias_error))`.
pub fn mzm_weight_modulate(
    i: &Waveform,
    w_drive: &Waveform,
    mzm: &MzmParams,
    fidelity: Fidelity,
) -> Result<Waveform> {
    mzm_weight_modulate_drifting(i, w_drive, mzm, fidelity, &[])
}

/// [`mzm_weight_modulate`] with an extra per-sample bias phase. In Linearized
/// mode the phase enters to first order and the bracket is clipped to
/// `[0, 2]` so the device stays passive.
pub fn mzm_weight_modulate_drifting(
    i: &Waveform,
    w_drive: &Waveform,
    mzm: &MzmParams,
    fidelity: Fidelity,
    phase: &[f64],
) -> Result<Waveform> {
    if mzm.bias != BiasPoint::QuadraturePoint {
        return Err(Error::Config(
            "weight modulator must be biased at the quadrature point".into(),
        ));
    }
    expect_kind(i, WaveformKind::OpticalIntensity, "weight modulator input")?;
    expect_kind(
        w_drive,
        WaveformKind::DriveVoltage,
        "weight modulator drive",
    )?;
    if i.len() != w_drive.len() {
        return Err(Error::dim(format!(
            "optical input has {} samples, weight drive {}",
            i.len(),
            w_drive.len()
        )));
    }
    check_phase_len(i, phase)?;
    let k = PI / mzm.v_pi;
    let mut out = Vec::with_capacity(i.len());
    for (n, (&intensity, &v)) in i.samples().iter().zip(w_drive.samples()).enumerate() {
        let x = k * v;
        let extra = mzm.bias_error + phase.get(n).copied().unwrap_or(0.0);
        let bracket = match fidelity {
            Fidelity::Linearized => {
                if x.abs() > 1.0 + LINEAR_RANGE_TOL {
                    return Err(Error::Range {
                        index: n,
                        value: v,
                        allowed: "|pi * drive / v_pi| <= 1 in linearized mode",
                    });
                }
                if extra == 0.0 {
                    1.0 + x
                } else {
                    (1.0 + x + extra).clamp(0.0, 2.0)
                }
            }
            Fidelity::Physical => 1.0 + (x + extra).sin(),
        };
        out.push(0.5 * intensity * bracket.max(0.0));
    }
    Ok(Waveform::from_parts(
        out,
        i.sample_rate(),
        WaveformKind::OpticalIntensity,
    ))
}

/// Variable optical attenuator: scales intensity by `alpha`.
pub fn voa_attenuate(i: &Waveform, voa: &VoaParams) -> Result<Waveform> {
    if !(0.0..=1.0).contains(&voa.alpha) {
        return Err(Error::Config(format!(
            "VOA alpha must be in [0, 1], got {}",
            voa.alpha
        )));
    }
    let out = i.samples().iter().map(|&x| voa.alpha * x).collect();
    Ok(Waveform::from_parts(out, i.sample_rate(), i.kind()))
}

/// Balanced detection: `R (upper - lower)` plus white detector noise drawn
/// from the stream owned by `noise`.
pub fn bpd_differential(
    upper: &Waveform,
    lower: &Waveform,
    bpd: &BpdParams,
    noise: &NoiseModel,
) -> Result<Waveform> {
    expect_kind(upper, WaveformKind::OpticalIntensity, "BPD upper input")?;
    expect_kind(lower, WaveformKind::OpticalIntensity, "BPD lower input")?;
    if upper.len() != lower.len() {
        return Err(Error::dim(format!(
            "BPD inputs differ in length: {} vs {}",
            upper.len(),
            lower.len()
        )));
    }
    if upper.sample_rate() != lower.sample_rate() {
        return Err(Error::dim(format!(
            "BPD inputs differ in sample rate: {} vs {}",
            upper.sample_rate(),
            lower.sample_rate()
        )));
    }
    let r = bpd.responsivity;
    let mut out: Vec<f64> = upper
        .samples()
        .iter()
        .zip(lower.samples())
        .map(|(&u, &l)| r * (u - l))
        .collect();
    if noise.detector_noise_std > 0.0 {
        let normal = Normal::new(0.0, noise.detector_noise_std)
            .map_err(|e| Error::Numeric(e.to_string()))?;
        let mut rng = noise.rng(PURPOSE_DETECTOR);
        for x in out.iter_mut() {
            *x += normal.sample(&mut rng);
        }
    }
    Ok(Waveform::from_parts(
        out,
        upper.sample_rate(),
        WaveformKind::Photocurrent,
    ))
}

/// Integrator output voltage at the last sample of the window
/// `[frame_start, frame_start + frame_len)`, with the state reset to zero at
/// `frame_start`.
pub fn integrate_frame(
    i: &Waveform,
    frame_start: usize,
    frame_len: usize,
    bpd: &BpdParams,
) -> Result<f64> {
    let end = frame_start
        .checked_add(frame_len)
        .filter(|&e| e <= i.len())
        .ok_or_else(|| {
            Error::dim(format!(
                "window [{frame_start}, {frame_start}+{frame_len}) exceeds {} samples",
                i.len()
            ))
        })?;
    let window = &i.samples()[frame_start..end];
    let dt = i.dt();
    Ok(match bpd.integrator_mode {
        IntegratorMode::IdealGated => {
            let charge: f64 = window.iter().sum::<f64>() * dt;
            charge / bpd.capacitance()
        }
        IntegratorMode::LeakyRc => {
            // exact zero-order-hold step of dV/dt = (R i - V) / tau
            let decay = (-dt / bpd.time_constant()).exp();
            let gain = -(-dt / bpd.time_constant()).exp_m1();
            let r = bpd.parasitic_resistance;
            window
                .iter()
                .fold(0.0, |v, &current| decay * v + gain * r * current)
        }
    })
}

/// Bias-phase random walk over `n_symbols`, starting at zero.
pub fn apply_bias_drift(noise: &NoiseModel, n_symbols: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_symbols];
    if noise.bias_drift_std == 0.0 || n_symbols == 0 {
        return out;
    }
    let normal = Normal::new(0.0, noise.bias_drift_std).expect("validated std");
    let mut rng = noise.rng(PURPOSE_DRIFT);
    for k in 1..n_symbols {
        out[k] = out[k - 1] + normal.sample(&mut rng);
    }
    out
}
