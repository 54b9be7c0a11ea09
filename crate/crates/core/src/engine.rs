//! The weighted-summation engine: data modulator, coupler, weight modulator,
//! attenuator and balanced detector composed into a dot-product unit, plus
//! the pilot-based calibration that turns integrator volts into unitless
//! results.
//!
//! Every frame is simulated from its own random substream, keyed by the
//! frame's position in the batch, so batches can be evaluated in parallel
//! without changing a single bit of the output.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::devices::{
    apply_bias_drift, bpd_differential, integrate_frame, mzm_data_modulate_drifting,
    mzm_weight_modulate_drifting, split_3db, voa_attenuate, weight_drive, BiasPoint, BpdParams,
    Fidelity, IntegratorMode, LaserParams, MzmParams, NoiseModel, VoaParams,
};
use crate::error::{Error, Result};
use crate::signal::{
    encode_vector, predistort, EncodingScheme, StreamRole, Waveform, WaveformKind,
};

/// Full configuration of one weighted-summation unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub laser: LaserParams,
    pub mzm_data: MzmParams,
    pub mzm_weight: MzmParams,
    pub voa: VoaParams,
    pub bpd: BpdParams,
    pub scheme: EncodingScheme,
    pub noise: NoiseModel,
    pub fidelity: Fidelity,
    /// Drive the weight modulator through `asin` in Physical mode.
    pub weight_predistortion: bool,
    /// Delay of the weight stream relative to the data stream, samples.
    pub sync_offset: i64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            laser: LaserParams::default(),
            mzm_data: MzmParams::data_default(),
            mzm_weight: MzmParams::weight_default(),
            voa: VoaParams::default(),
            bpd: BpdParams::default(),
            scheme: EncodingScheme::default(),
            noise: NoiseModel::default(),
            fidelity: Fidelity::Linearized,
            weight_predistortion: true,
            sync_offset: 0,
        }
    }
}

impl EngineConfig {
    /// Default configuration with every impairment switched off.
    pub fn noiseless() -> Self {
        Self {
            noise: NoiseModel::disabled(),
            ..Self::default()
        }
    }

    pub fn without_noise(&self) -> Self {
        Self {
            noise: NoiseModel::disabled(),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mzm_data.bias != BiasPoint::NullPoint {
            return Err(Error::Config(
                "mzm_data must use the null_point bias".into(),
            ));
        }
        if self.mzm_weight.bias != BiasPoint::QuadraturePoint {
            return Err(Error::Config(
                "mzm_weight must use the quadrature_point bias".into(),
            ));
        }
        for (name, v) in [
            ("laser.intensity_in", self.laser.intensity_in),
            ("laser.wavelength", self.laser.wavelength),
            ("mzm_data.v_pi", self.mzm_data.v_pi),
            ("mzm_weight.v_pi", self.mzm_weight.v_pi),
            ("bpd.responsivity", self.bpd.responsivity),
            ("bpd.parasitic_resistance", self.bpd.parasitic_resistance),
            ("bpd.bandwidth", self.bpd.bandwidth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.voa.alpha) {
            return Err(Error::Config(format!(
                "voa.alpha must be in [0, 1], got {}",
                self.voa.alpha
            )));
        }
        self.scheme.validate()?;
        self.noise.validate()?;
        if self.bpd.integrator_mode == IntegratorMode::LeakyRc && self.scheme.guard_symbols == 0 {
            return Err(Error::Config(
                "leaky integrator needs at least one guard symbol for reset".into(),
            ));
        }
        Ok(())
    }
}

/// Maps integrator volts to dot-product units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationResult {
    /// Volts per unit dot product.
    pub gain: f64,
    /// Volts read for an all-zero pilot.
    pub residual_offset: f64,
    /// Advance applied to the weight stream to undo the measured misalignment.
    pub found_sync_offset: i64,
}

/// Intermediate signals of one simulated frame, up to the optical inputs of
/// the balanced detector.
#[derive(Debug, Clone)]
pub struct OpticalFrame {
    /// Normalized data stream `M(t)`.
    pub data: Waveform,
    /// Pre-distorted data drive `M_L(t)`.
    pub data_drive: Waveform,
    /// Weight modulator drive.
    pub weight_drive: Waveform,
    /// Output of the data modulator.
    pub modulated: Waveform,
    pub upper: Waveform,
    pub lower: Waveform,
    pub n_symbols: usize,
}

const KEY_DATA_DRIFT: u64 = 1;
const KEY_WEIGHT_DRIFT: u64 = 2;
const KEY_DETECTOR: u64 = 3;
const KEY_JITTER: u64 = 4;

fn hold_per_symbol(per_symbol: &[f64], sps: usize) -> Vec<f64> {
    per_symbol
        .iter()
        .flat_map(|&p| std::iter::repeat_n(p, sps))
        .collect()
}

/// Simulates the optical part of one frame. `key` selects the random
/// substream; `compensation` is the weight-stream advance applied by the
/// synchronization calibration.
pub fn optical_frame(
    cfg: &EngineConfig,
    data: &[f64],
    weights: &[f64],
    key: u64,
    compensation: i64,
) -> Result<OpticalFrame> {
    if data.len() != weights.len() {
        return Err(Error::dim(format!(
            "data has {} elements, weights {}",
            data.len(),
            weights.len()
        )));
    }
    let scheme = &cfg.scheme;
    let sps = scheme.samples_per_symbol;
    let n_symbols = data.len() + scheme.guard_symbols;
    let noise = cfg.noise.substream(key);

    let m = encode_vector(data, scheme, StreamRole::Data)?;
    let data_drive = predistort(&m, cfg.mzm_data.v_pi)?;

    let (phase_data, phase_weight) = if noise.bias_drift_std > 0.0 {
        (
            hold_per_symbol(
                &apply_bias_drift(&noise.substream(KEY_DATA_DRIFT), n_symbols),
                sps,
            ),
            hold_per_symbol(
                &apply_bias_drift(&noise.substream(KEY_WEIGHT_DRIFT), n_symbols),
                sps,
            ),
        )
    } else {
        (Vec::new(), Vec::new())
    };

    let modulated = mzm_data_modulate_drifting(
        cfg.laser.intensity_in,
        &data_drive,
        &cfg.mzm_data,
        &phase_data,
    )?;
    let (upper_in, lower_in) = split_3db(&modulated);

    let w = encode_vector(weights, scheme, StreamRole::Weight)?;
    let v_pi = cfg.mzm_weight.v_pi;
    let volts: Vec<f64> = w
        .samples()
        .iter()
        .map(|&x| weight_drive(x, v_pi, cfg.fidelity, cfg.weight_predistortion))
        .collect();
    let mut shift = cfg.sync_offset - compensation;
    if noise.sync_jitter_std > 0.0 {
        let normal =
            Normal::new(0.0, noise.sync_jitter_std).map_err(|e| Error::Numeric(e.to_string()))?;
        let mut rng = noise.substream(KEY_JITTER).rng(0);
        shift += normal.sample(&mut rng).round() as i64;
    }
    let weight_drive =
        Waveform::new(volts, w.sample_rate(), WaveformKind::DriveVoltage)?.shifted(shift);

    let upper = mzm_weight_modulate_drifting(
        &upper_in,
        &weight_drive,
        &cfg.mzm_weight,
        cfg.fidelity,
        &phase_weight,
    )?;
    let lower = voa_attenuate(&lower_in, &cfg.voa)?;
    Ok(OpticalFrame {
        data: m,
        data_drive,
        weight_drive,
        modulated,
        upper,
        lower,
        n_symbols: data.len(),
    })
}

/// Balanced detection and integration of one frame. Returns the photocurrent
/// and the integrator voltage read at the last data sample.
pub fn detect_frame(
    cfg: &EngineConfig,
    upper: &Waveform,
    lower: &Waveform,
    n_symbols: usize,
    key: u64,
) -> Result<(Waveform, f64)> {
    let noise = cfg.noise.substream(key).substream(KEY_DETECTOR);
    let current = bpd_differential(upper, lower, &cfg.bpd, &noise)?;
    let window = n_symbols * cfg.scheme.samples_per_symbol;
    let v = integrate_frame(&current, 0, window, &cfg.bpd)?;
    Ok((current, v))
}

/// Raw integrator voltage of one frame.
pub fn frame_voltage(
    cfg: &EngineConfig,
    data: &[f64],
    weights: &[f64],
    key: u64,
    compensation: i64,
) -> Result<f64> {
    let f = optical_frame(cfg, data, weights, key, compensation)?;
    let (_, v) = detect_frame(cfg, &f.upper, &f.lower, f.n_symbols, key)?;
    Ok(v)
}

impl CalibrationResult {
    /// Converts a raw frame voltage into dot-product units.
    pub fn apply(&self, volts: f64) -> f64 {
        (volts - self.residual_offset) / self.gain
    }
}

/// Weighted sum of `data` (in `[0,1]`) and `weights` (in `[-1,1]`) through
/// the simulated chain.
pub fn weighted_sum(
    data: &[f64],
    weights: &[f64],
    cfg: &EngineConfig,
    cal: &CalibrationResult,
) -> Result<f64> {
    weighted_sum_keyed(data, weights, cfg, cal, 0)
}

/// [`weighted_sum`] on the random substream `key`.
pub fn weighted_sum_keyed(
    data: &[f64],
    weights: &[f64],
    cfg: &EngineConfig,
    cal: &CalibrationResult,
    key: u64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::dim("weighted sum of empty vectors"));
    }
    let v = frame_voltage(cfg, data, weights, key, cal.found_sync_offset)?;
    Ok(cal.apply(v))
}

/// All pairwise weighted sums of data rows (M x N) and weight rows (L x N),
/// time-multiplexed as M*L frames. Frame `(m, l)` uses substream `m * L + l`.
pub fn batched_weighted_sum(
    data: ArrayView2<f64>,
    weights: ArrayView2<f64>,
    cfg: &EngineConfig,
    cal: &CalibrationResult,
) -> Result<Array2<f64>> {
    let (m, n) = data.dim();
    let (l, n_w) = weights.dim();
    if n != n_w {
        return Err(Error::dim(format!(
            "data rows have {n} elements, weight rows {n_w}"
        )));
    }
    if m == 0 || l == 0 || n == 0 {
        return Err(Error::dim(format!("empty batch: {m}x{n} by {l}x{n_w}")));
    }
    let data_rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let weight_rows: Vec<Vec<f64>> = weights.rows().into_iter().map(|r| r.to_vec()).collect();
    let out: Result<Vec<f64>> = (0..m * l)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / l, idx % l);
            weighted_sum_keyed(&data_rows[i], &weight_rows[j], cfg, cal, idx as u64)
        })
        .collect();
    Ok(Array2::from_shape_vec((m, l), out?).expect("shape matches"))
}

/// Number of symbols in each calibration pilot.
pub const GAIN_PILOT_LEN: usize = 16;

/// Gain and offset calibration for streams assumed to be aligned.
pub fn calibrate_gain(cfg: &EngineConfig) -> Result<CalibrationResult> {
    calibrate_gain_with_sync(cfg, 0)
}

fn calibrate_gain_with_sync(cfg: &EngineConfig, compensation: i64) -> Result<CalibrationResult> {
    cfg.validate()?;
    let quiet = cfg.without_noise();
    let zeros = [0.0; GAIN_PILOT_LEN];
    let ones = [1.0; GAIN_PILOT_LEN];
    let offset = frame_voltage(&quiet, &zeros, &zeros, 0, compensation)?;
    let full = frame_voltage(&quiet, &ones, &ones, 0, compensation)?;
    let gain = (full - offset) / GAIN_PILOT_LEN as f64;
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Calibration(format!("degenerate gain {gain}")));
    }
    Ok(CalibrationResult {
        gain,
        residual_offset: offset,
        found_sync_offset: compensation,
    })
}

/// Minimum pilot length accepted by [`find_sync_offset`].
pub const MIN_SYNC_PILOT: usize = 32;

/// Recovers the data/weight misalignment by sweeping the weight-stream
/// advance over +-2 symbols. The pilot is correlated against its own
/// zero-mean copy, whose response peaks at perfect alignment. Ties go to the
/// smallest absolute offset.
pub fn find_sync_offset(
    cfg: &EngineConfig,
    pilot: &[f64],
    true_offset_injected: i64,
) -> Result<i64> {
    if pilot.len() < MIN_SYNC_PILOT {
        return Err(Error::dim(format!(
            "sync pilot needs at least {MIN_SYNC_PILOT} symbols, got {}",
            pilot.len()
        )));
    }
    let mean = pilot.iter().sum::<f64>() / pilot.len() as f64;
    let centered: Vec<f64> = pilot.iter().map(|&p| p - mean).collect();
    let peak = centered.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if peak == 0.0 {
        return Err(Error::Calibration(
            "constant sync pilot gives a flat response".into(),
        ));
    }
    let weights: Vec<f64> = centered.iter().map(|&c| c / peak).collect();
    let probe = EngineConfig {
        sync_offset: true_offset_injected,
        ..*cfg
    };
    let span = 2 * cfg.scheme.samples_per_symbol as i64;
    let candidates: Vec<i64> = (-span..=span).collect();
    let responses: Result<Vec<f64>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, &c)| frame_voltage(&probe, pilot, &weights, i as u64, c))
        .collect();
    let responses = responses?;
    let (lo, hi) = responses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    if (hi - lo).is_nan() || hi - lo <= 1e-12 * hi.abs().max(lo.abs()) {
        return Err(Error::Calibration("flat sync response curve".into()));
    }
    let mut best = (candidates[0], responses[0]);
    for (&c, &r) in candidates.iter().zip(&responses).skip(1) {
        let better = r > best.1 || (r == best.1 && (c.abs(), c) < (best.0.abs(), best.0));
        if better {
            best = (c, r);
        }
    }
    Ok(best.0)
}

/// Seeded random pilot used by [`calibrate`].
pub fn default_sync_pilot(len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_5111C);
    let u = Uniform::new_inclusive(0.0, 1.0);
    (0..len).map(|_| u.sample(&mut rng)).collect()
}

/// Full calibration: synchronization search followed by gain and offset,
/// all with noise disabled.
pub fn calibrate(cfg: &EngineConfig) -> Result<CalibrationResult> {
    cfg.validate()?;
    let quiet = cfg.without_noise();
    let found = find_sync_offset(&quiet, &default_sync_pilot(64), cfg.sync_offset)?;
    calibrate_gain_with_sync(cfg, found)
}

/// A configured and calibrated weighted-summation unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonicEngine {
    pub cfg: EngineConfig,
    pub cal: CalibrationResult,
}

impl PhotonicEngine {
    /// Validates `cfg` and runs [`calibrate`].
    pub fn calibrated(cfg: EngineConfig) -> Result<Self> {
        let cal = calibrate(&cfg)?;
        Ok(Self { cfg, cal })
    }

    pub fn noiseless() -> Self {
        Self::calibrated(EngineConfig::noiseless()).expect("default config calibrates")
    }

    /// Same engine drawing noise from an independent substream.
    pub fn with_stream(&self, key: u64) -> Self {
        Self {
            cfg: EngineConfig {
                noise: self.cfg.noise.substream(key),
                ..self.cfg
            },
            cal: self.cal,
        }
    }

    pub fn weighted_sum(&self, data: &[f64], weights: &[f64]) -> Result<f64> {
        weighted_sum(data, weights, &self.cfg, &self.cal)
    }

    pub fn batched(&self, data: ArrayView2<f64>, weights: ArrayView2<f64>) -> Result<Array2<f64>> {
        batched_weighted_sum(data, weights, &self.cfg, &self.cal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dot_digital, matmul_digital};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn engine() -> PhotonicEngine {
        PhotonicEngine::noiseless()
    }

    fn rel_close(got: f64, want: f64, rel: f64) -> bool {
        if want == 0.0 {
            got.abs() <= 1e-12
        } else {
            (got - want).abs() <= rel * want.abs()
        }
    }

    fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
        let d = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let w = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        (d, w)
    }

    #[test]
    fn weighted_sum_examples() {
        let e = engine();
        let oracle = dot_digital(&[1.0, 0.0, 1.0], &[0.5, -0.3, 0.25]).unwrap();
        assert_eq!(oracle, 0.75);
        let got = e
            .weighted_sum(&[1.0, 0.0, 1.0], &[0.5, -0.3, 0.25])
            .unwrap();
        assert!(rel_close(got, oracle, 1e-9), "{got}");
        assert!(e.weighted_sum(&[0.3, 0.9, 0.1], &[0.0; 3]).unwrap().abs() <= 1e-12);
        let w = [0.1, -0.7, 0.4, 0.9];
        for k in 0..4 {
            let mut basis = [0.0; 4];
            basis[k] = 1.0;
            assert!(rel_close(e.weighted_sum(&basis, &w).unwrap(), w[k], 1e-9));
        }
    }

    #[test]
    fn weighted_sum_errors() {
        let e = engine();
        assert!(matches!(
            e.weighted_sum(&[1.0], &[1.0, 0.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            e.weighted_sum(&[1.2], &[1.0]),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            e.weighted_sum(&[0.2], &[-1.2]),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn batched_examples() {
        let e = engine();
        let out = e
            .batched(array![[1.0]].view(), array![[1.0]].view())
            .unwrap();
        assert!((out[[0, 0]] - 1.0).abs() < 1e-9);

        let eye = Array2::<f64>::eye(4);
        let out = e.batched(eye.view(), eye.view()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((out[[i, j]] - want).abs() < 1e-9);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Array2::from_shape_fn((3, 8), |_| rng.gen_range(0.0..=1.0));
        let w = Array2::from_shape_fn((2, 8), |_| rng.gen_range(-1.0..=1.0));
        let got = e.batched(d.view(), w.view()).unwrap();
        let want = matmul_digital(d.view(), w.view()).unwrap();
        for (g, o) in got.iter().zip(want.iter()) {
            assert!(rel_close(*g, *o, 1e-9), "{g} vs {o}");
        }
        let bad = Array2::<f64>::zeros((2, 7));
        assert!(matches!(
            e.batched(d.view(), bad.view()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn calibration_examples() {
        let cfg = EngineConfig::noiseless();
        let cal = calibrate_gain(&cfg).unwrap();
        assert_eq!(cal.residual_offset, 0.0);
        assert!((weighted_sum(&[1.0], &[1.0], &cfg, &cal).unwrap() - 1.0).abs() < 1e-9);

        let bright = EngineConfig {
            laser: LaserParams {
                intensity_in: 2.0 * cfg.laser.intensity_in,
                ..cfg.laser
            },
            ..cfg
        };
        let cal2 = calibrate_gain(&bright).unwrap();
        let d = [0.2, 0.9, 0.4];
        let w = [0.5, -0.25, 0.75];
        let v1 = frame_voltage(&cfg, &d, &w, 0, 0).unwrap();
        let v2 = frame_voltage(&bright, &d, &w, 0, 0).unwrap();
        assert!((v2 / v1 - 2.0).abs() < 1e-12);
        let a = weighted_sum(&d, &w, &cfg, &cal).unwrap();
        let b = weighted_sum(&d, &w, &bright, &cal2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn calibration_rejects_bad_config() {
        let mut cfg = EngineConfig::noiseless();
        cfg.mzm_data.bias = BiasPoint::QuadraturePoint;
        assert!(matches!(calibrate_gain(&cfg), Err(Error::Config(_))));
        let mut cfg = EngineConfig::noiseless();
        cfg.bpd.integrator_mode = IntegratorMode::LeakyRc;
        cfg.scheme.guard_symbols = 0;
        assert!(matches!(calibrate_gain(&cfg), Err(Error::Config(_))));
        // a weight modulator parked at the wrong slope gives a negative gain
        let mut cfg = EngineConfig::noiseless();
        cfg.fidelity = Fidelity::Physical;
        cfg.mzm_weight.bias_error = std::f64::consts::PI;
        assert!(matches!(calibrate_gain(&cfg), Err(Error::Calibration(_))));
    }

    #[test]
    fn sync_offset_examples() {
        let cfg = EngineConfig::noiseless();
        let pilot = default_sync_pilot(48);
        assert_eq!(find_sync_offset(&cfg, &pilot, 0).unwrap(), 0);
        assert_eq!(find_sync_offset(&cfg, &pilot, 5).unwrap(), 5);
        assert_eq!(find_sync_offset(&cfg, &pilot, -11).unwrap(), -11);
        assert!(matches!(
            find_sync_offset(&cfg, &[0.5; 40], 3),
            Err(Error::Calibration(_))
        ));
        assert!(matches!(
            find_sync_offset(&cfg, &pilot[..20], 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn sync_offset_under_default_noise() {
        let mut hits = 0;
        for seed in 0..100u64 {
            let cfg = EngineConfig {
                noise: NoiseModel::default().with_seed(seed),
                ..EngineConfig::default()
            };
            let pilot = default_sync_pilot(64);
            let found = find_sync_offset(&cfg, &pilot, 5).unwrap();
            if (found - 5).abs() <= 1 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn full_calibration_undoes_misalignment() {
        let cfg = EngineConfig {
            sync_offset: 7,
            ..EngineConfig::noiseless()
        };
        let e = PhotonicEngine::calibrated(cfg).unwrap();
        assert_eq!(e.cal.found_sync_offset, 7);
        let (d, w) = random_pair(&mut ChaCha8Rng::seed_from_u64(1), 50);
        let want = dot_digital(&d, &w).unwrap();
        assert!(rel_close(e.weighted_sum(&d, &w).unwrap(), want, 1e-9));
    }

    #[test]
    fn desync_degrades_output() {
        let e = engine();
        let (d, w) = random_pair(&mut ChaCha8Rng::seed_from_u64(11), 64);
        let want = dot_digital(&d, &w).unwrap();
        let skewed = EngineConfig {
            sync_offset: e.cfg.scheme.samples_per_symbol as i64,
            ..e.cfg
        };
        let got = weighted_sum(&d, &w, &skewed, &e.cal).unwrap();
        assert!((got - want).abs() >= 10.0 * 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn physical_mode_with_predistortion_is_exact() {
        let cfg = EngineConfig {
            fidelity: Fidelity::Physical,
            ..EngineConfig::noiseless()
        };
        let e = PhotonicEngine::calibrated(cfg).unwrap();
        let (d, w) = random_pair(&mut ChaCha8Rng::seed_from_u64(5), 100);
        let want = dot_digital(&d, &w).unwrap();
        assert!(rel_close(e.weighted_sum(&d, &w).unwrap(), want, 1e-9));

        // without the asin drive the sine compresses; calibration at w = 1
        // only fixes the scale
        let raw = PhotonicEngine::calibrated(EngineConfig {
            weight_predistortion: false,
            ..cfg
        })
        .unwrap();
        let got = raw.weighted_sum(&[1.0; 10], &[0.5; 10]).unwrap();
        let want = 10.0 * 0.5f64.sin() / 1f64.sin();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn noisy_runs_are_deterministic() {
        let e = PhotonicEngine::calibrated(EngineConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Array2::from_shape_fn((4, 30), |_| rng.gen_range(0.0..=1.0));
        let w = Array2::from_shape_fn((3, 30), |_| rng.gen_range(-1.0..=1.0));
        let a = e.batched(d.view(), w.view()).unwrap();
        let b = e.batched(d.view(), w.view()).unwrap();
        assert_eq!(a, b);
        let c = e.with_stream(1).batched(d.view(), w.view()).unwrap();
        assert_ne!(a, c);
        let exact = matmul_digital(d.view(), w.view()).unwrap();
        for (x, y) in a.iter().zip(exact.iter()) {
            assert!(
                (x - y).abs() < 0.5,
                "noise should stay moderate: {x} vs {y}"
            );
        }
    }

    #[test]
    fn leaky_integrator_droops() {
        let cfg = EngineConfig {
            bpd: BpdParams {
                integrator_mode: IntegratorMode::LeakyRc,
                ..BpdParams::default()
            },
            ..EngineConfig::noiseless()
        };
        let e = PhotonicEngine::calibrated(cfg).unwrap();
        // symbols far from the readout instant decay more
        let mut early = vec![0.0; 200];
        early[0] = 1.0;
        let mut late = vec![0.0; 200];
        late[199] = 1.0;
        let w = vec![1.0; 200];
        assert!(e.weighted_sum(&early, &w).unwrap() < e.weighted_sum(&late, &w).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn oracle_equivalence(seed in any::<u64>(), n in 1usize..200) {
            let (d, w) = random_pair(&mut ChaCha8Rng::seed_from_u64(seed), n);
            let got = engine().weighted_sum(&d, &w).unwrap();
            let want = dot_digital(&d, &w).unwrap();
            prop_assert!(rel_close(got, want, 1e-9) || (got - want).abs() < 1e-12, "{} vs {}", got, want);
        }

        #[test]
        fn bilinearity_and_sign_symmetry(seed in any::<u64>(), a in 0.0f64..=1.0) {
            let e = engine();
            let (d, w) = random_pair(&mut ChaCha8Rng::seed_from_u64(seed), 24);
            let base = e.weighted_sum(&d, &w).unwrap();
            let scaled: Vec<f64> = d.iter().map(|x| a * x).collect();
            prop_assert!((e.weighted_sum(&scaled, &w).unwrap() - a * base).abs() <= 1e-9 * base.abs().max(1.0));
            let neg: Vec<f64> = w.iter().map(|x| -x).collect();
            prop_assert!((e.weighted_sum(&d, &neg).unwrap() + base).abs() <= 1e-9 * base.abs().max(1.0));
            let half: Vec<f64> = w.iter().map(|x| 0.5 * x).collect();
            let sum = e.weighted_sum(&d, &half).unwrap() + e.weighted_sum(&d, &half).unwrap();
            prop_assert!((sum - base).abs() <= 1e-9 * base.abs().max(1.0));
        }
    }
}
