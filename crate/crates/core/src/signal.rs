//! Temporal encoding of vectors and images.
//!
//! Operands are streamed as piecewise-constant symbols: every element is held
//! for `samples_per_symbol` samples and each frame (one full dot product) is
//! followed by `guard_symbols` of zero drive that give the detector integrator
//! time to reset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical quantity carried by a [`Waveform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    /// Optical intensity in watts; never negative.
    OpticalIntensity,
    /// Modulator drive voltage in volts.
    DriveVoltage,
    /// Detector photocurrent in amperes.
    Photocurrent,
    /// Generic (electrical) voltage, also used for normalized data streams.
    Voltage,
}

impl WaveformKind {
    /// Numeric tag used by the binary waveform dump.
    pub fn code(self) -> u32 {
        match self {
            WaveformKind::OpticalIntensity => 0,
            WaveformKind::DriveVoltage => 1,
            WaveformKind::Photocurrent => 2,
            WaveformKind::Voltage => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => WaveformKind::OpticalIntensity,
            1 => WaveformKind::DriveVoltage,
            2 => WaveformKind::Photocurrent,
            3 => WaveformKind::Voltage,
            _ => return None,
        })
    }
}

/// Uniformly sampled, real-valued time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    kind: WaveformKind,
}

impl Waveform {
    /// Builds a waveform, checking that samples are finite, that intensity
    /// waveforms are non-negative and that the sample rate is positive.
    pub fn new(samples: Vec<f64>, sample_rate: f64, kind: WaveformKind) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Config(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        for (index, &value) in samples.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite sample {value} at index {index}"
                )));
            }
            if kind == WaveformKind::OpticalIntensity && value < 0.0 {
                return Err(Error::Range {
                    index,
                    value,
                    allowed: "[0, inf) for optical intensity",
                });
            }
        }
        Ok(Self {
            samples,
            sample_rate,
            kind,
        })
    }

    /// Constructor for internal transfer functions whose outputs satisfy the
    /// invariants by construction.
    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate: f64, kind: WaveformKind) -> Self {
        debug_assert!(sample_rate > 0.0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        debug_assert!(kind != WaveformKind::OpticalIntensity || samples.iter().all(|&s| s >= 0.0));
        Self {
            samples,
            sample_rate,
            kind,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample spacing in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Delays the waveform by `shift` samples (advances it when negative).
    /// Length is preserved; vacated samples are zero.
    pub fn shifted(&self, shift: i64) -> Waveform {
        let n = self.samples.len();
        let mut out = vec![0.0; n];
        if shift >= 0 {
            let s = (shift as usize).min(n);
            out[s..].copy_from_slice(&self.samples[..n - s]);
        } else {
            let s = (shift.unsigned_abs() as usize).min(n);
            out[..n - s].copy_from_slice(&self.samples[s..]);
        }
        Waveform::from_parts(out, self.sample_rate, self.kind)
    }
}

/// How operands are laid out in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodingScheme {
    /// Symbols per second.
    pub symbol_rate: f64,
    pub samples_per_symbol: usize,
    /// Zero symbols appended after every frame.
    pub guard_symbols: usize,
}

impl Default for EncodingScheme {
    fn default() -> Self {
        Self {
            symbol_rate: 10e9,
            samples_per_symbol: 8,
            guard_symbols: 4,
        }
    }
}

impl EncodingScheme {
    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    /// Total samples of one frame carrying `n` symbols, guard included.
    pub fn frame_samples(&self, n: usize) -> usize {
        (n + self.guard_symbols) * self.samples_per_symbol
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return Err(Error::Config(format!(
                "symbol_rate must be positive, got {}",
                self.symbol_rate
            )));
        }
        if self.samples_per_symbol == 0 {
            return Err(Error::Config(
                "samples_per_symbol must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which operand a stream carries; decides the admissible value range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    /// Normalized data `M(t)` in `[0, 1]`.
    Data,
    /// Normalized weights `W(t)` in `[-1, 1]`.
    Weight,
}

/// Grayscale image with pixels in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::dim(format!(
                "image must be non-empty, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::dim(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::Range {
                index,
                value,
                allowed: "[0, 1] for pixels",
            });
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// All-zero image.
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel with zero padding outside the image.
    pub fn get_padded(&self, y: isize, x: isize) -> f64 {
        if y < 0 || x < 0 || y as usize >= self.height || x as usize >= self.width {
            0.0
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    /// Writes `other` with its top-left corner at `(top, left)`, clipping at
    /// the border. Overlapping pixels take the maximum of the two.
    pub fn paste_max(&mut self, other: &ImageTensor, top: usize, left: usize) {
        for y in 0..other.height {
            for x in 0..other.width {
                let (ty, tx) = (top + y, left + x);
                if ty < self.height && tx < self.width {
                    let p = &mut self.pixels[ty * self.width + tx];
                    *p = p.max(other.get(y, x));
                }
            }
        }
    }

    /// Copies the `size`x`size` window whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, size: usize) -> Result<ImageTensor> {
        if top + size > self.height || left + size > self.width {
            return Err(Error::dim(format!(
                "crop {size}x{size} at ({top},{left}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity(size * size);
        for y in top..top + size {
            pixels.extend_from_slice(
                &self.pixels[y * self.width + left..y * self.width + left + size],
            );
        }
        Ok(ImageTensor {
            height: size,
            width: size,
            pixels,
        })
    }
}

/// Maps raw 8-bit pixels to `[0, 1]` by dividing by 255.
pub fn normalize_pixels(raw: &[u8], height: usize, width: usize) -> Result<ImageTensor> {
    if raw.len() != height * width {
        return Err(Error::dim(format!(
            "{} raw pixels for a {height}x{width} image",
            raw.len()
        )));
    }
    let pixels = raw.iter().map(|&p| f64::from(p) / 255.0).collect();
    ImageTensor::new(height, width, pixels)
}

/// Row-major flattening.
pub fn flatten_image(img: &ImageTensor) -> Vec<f64> {
    img.pixels.clone()
}

/// Holds each element for `samples_per_symbol` samples and appends the guard
/// interval. Data streams come out as [`WaveformKind::Voltage`], weight
/// streams as [`WaveformKind::DriveVoltage`] (still normalized).
pub fn encode_vector(v: &[f64], scheme: &EncodingScheme, role: StreamRole) -> Result<Waveform> {
    scheme.validate()?;
    let (range, allowed, kind) = match role {
        StreamRole::Data => (0.0..=1.0, "[0, 1] for data", WaveformKind::Voltage),
        StreamRole::Weight => (
            -1.0..=1.0,
            "[-1, 1] for weights",
            WaveformKind::DriveVoltage,
        ),
    };
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !range.contains(*x)) {
        return Err(Error::Range {
            index,
            value,
            allowed,
        });
    }
    if v.is_empty() {
        return Ok(Waveform::from_parts(Vec::new(), scheme.sample_rate(), kind));
    }
    let sps = scheme.samples_per_symbol;
    let mut samples = Vec::with_capacity(scheme.frame_samples(v.len()));
    for &x in v {
        samples.extend(std::iter::repeat_n(x, sps));
    }
    samples.resize(scheme.frame_samples(v.len()), 0.0);
    Ok(Waveform::from_parts(samples, scheme.sample_rate(), kind))
}

/// Inverse of [`encode_vector`]: reads `n` symbols at mid-symbol positions.
pub fn decode_vector(w: &Waveform, scheme: &EncodingScheme, n: usize) -> Result<Vec<f64>> {
    let sps = scheme.samples_per_symbol;
    if n * sps > w.len() {
        return Err(Error::dim(format!(
            "{n} symbols need {} samples, waveform has {}",
            n * sps,
            w.len()
        )));
    }
    Ok((0..n).map(|k| w.samples[k * sps + sps / 2]).collect())
}

const PREDISTORT_TOL: f64 = 1e-12;

/// Drive voltage that makes a null-biased modulator transmit `m`:
/// `(2 v_pi / pi) * asin(sqrt(m))`.
pub fn predistort_value(m: f64, v_pi: f64) -> f64 {
    (2.0 * v_pi / std::f64::consts::PI) * m.clamp(0.0, 1.0).sqrt().asin()
}

/// Applies [`predistort_value`] sample by sample. Inputs may overshoot
/// `[0, 1]` by at most 1e-12 (clamped); anything further is a range error.
pub fn predistort(m: &Waveform, v_pi: f64) -> Result<Waveform> {
    if v_pi.is_nan() || v_pi <= 0.0 {
        return Err(Error::Config(format!("v_pi must be positive, got {v_pi}")));
    }
    let mut out = Vec::with_capacity(m.len());
    for (index, &value) in m.samples.iter().enumerate() {
        if !(-PREDISTORT_TOL..=1.0 + PREDISTORT_TOL).contains(&value) {
            return Err(Error::Range {
                index,
                value,
                allowed: "[0, 1] for predistortion",
            });
        }
        out.push(predistort_value(value, v_pi));
    }
    debug_assert!(out.iter().all(|&v| v <= v_pi * (1.0 + 1e-15) && v >= 0.0));
    Ok(Waveform::from_parts(
        out,
        m.sample_rate,
        WaveformKind::DriveVoltage,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scheme(sps: usize, guard: usize) -> EncodingScheme {
        EncodingScheme {
            symbol_rate: 1e9,
            samples_per_symbol: sps,
            guard_symbols: guard,
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_pixels(&[0], 1, 1).unwrap().pixels(), &[0.0]);
        assert_eq!(normalize_pixels(&[255], 1, 1).unwrap().pixels(), &[1.0]);
        assert_eq!(normalize_pixels(&[51], 1, 1).unwrap().pixels(), &[0.2]);
        assert!(matches!(
            normalize_pixels(&[1, 2], 1, 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn flatten_is_row_major() {
        let img = ImageTensor::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(flatten_image(&img), vec![0.1, 0.2, 0.3, 0.4]);
        let one = ImageTensor::new(1, 1, vec![0.7]).unwrap();
        assert_eq!(flatten_image(&one), vec![0.7]);
        assert_eq!(flatten_image(&ImageTensor::zeros(28, 28)).len(), 784);
    }

    #[test]
    fn encode_examples() {
        let w = encode_vector(&[1.0], &scheme(4, 0), StreamRole::Data).unwrap();
        assert_eq!(w.samples(), &[1.0; 4]);
        let w = encode_vector(&[], &scheme(4, 2), StreamRole::Data).unwrap();
        assert!(w.is_empty());
        let w = encode_vector(&[0.5, -0.5], &scheme(2, 1), StreamRole::Weight).unwrap();
        assert_eq!(w.samples(), &[0.5, 0.5, -0.5, -0.5, 0.0, 0.0]);
        assert_eq!(w.sample_rate(), 2e9);
    }

    #[test]
    fn encode_rejects_out_of_range_with_index() {
        match encode_vector(&[0.2, 1.5], &scheme(2, 0), StreamRole::Data) {
            Err(Error::Range { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        assert!(encode_vector(&[-0.5], &scheme(2, 0), StreamRole::Data).is_err());
        assert!(encode_vector(&[-1.01], &scheme(2, 0), StreamRole::Weight).is_err());
    }

    #[test]
    fn predistort_examples() {
        let wf = |v: f64| Waveform::new(vec![v], 1.0, WaveformKind::Voltage).unwrap();
        assert_eq!(predistort(&wf(0.0), 3.5).unwrap().samples()[0], 0.0);
        assert!((predistort(&wf(1.0), 3.5).unwrap().samples()[0] - 3.5).abs() < 1e-15);
        assert!((predistort(&wf(0.5), 3.5).unwrap().samples()[0] - 1.75).abs() < 1e-15);
        assert!(predistort(&wf(1.0 + 1e-13), 3.5).is_ok());
        assert!(matches!(
            predistort(&wf(1.0 + 1e-9), 3.5),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            predistort(&wf(-1e-9), 3.5),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn waveform_invariants() {
        assert!(Waveform::new(vec![-0.1], 1.0, WaveformKind::OpticalIntensity).is_err());
        assert!(Waveform::new(vec![-0.1], 1.0, WaveformKind::Photocurrent).is_ok());
        assert!(Waveform::new(vec![f64::NAN], 1.0, WaveformKind::Voltage).is_err());
        assert!(Waveform::new(vec![0.0], 0.0, WaveformKind::Voltage).is_err());
    }

    #[test]
    fn shift_moves_samples() {
        let w = Waveform::new(vec![1.0, 2.0, 3.0], 1.0, WaveformKind::Voltage).unwrap();
        assert_eq!(w.shifted(1).samples(), &[0.0, 1.0, 2.0]);
        assert_eq!(w.shifted(-2).samples(), &[3.0, 0.0, 0.0]);
        assert_eq!(w.shifted(5).samples(), &[0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn predistort_round_trip(m in 0.0f64..=1.0, v_pi in 0.5f64..10.0) {
            let drive = predistort_value(m, v_pi);
            let back = (std::f64::consts::PI * drive / (2.0 * v_pi)).sin().powi(2);
            prop_assert!((back - m).abs() <= 1e-12);
            prop_assert!((0.0..=v_pi).contains(&drive));
        }

        #[test]
        fn predistort_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(predistort_value(lo, 3.5) <= predistort_value(hi, 3.5));
        }

        #[test]
        fn encode_decode_round_trip(
            v in proptest::collection::vec(-1.0f64..=1.0, 0..40),
            sps in 1usize..9,
            guard in 0usize..4,
        ) {
            let s = scheme(sps, guard);
            let w = encode_vector(&v, &s, StreamRole::Weight).unwrap();
            prop_assert_eq!(decode_vector(&w, &s, v.len()).unwrap(), v);
        }
    }
}
