use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{Waveform, WaveformKind};

const MAGIC: &[u8; 4] = b"TCWF";
const HEADER_LEN: usize = 16;

/// Binary dump: `TCWF`, u32 kind, f64 sample rate, then f64 samples, all
/// little-endian.
pub fn encode_tcwf(w: &Waveform) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * w.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&w.kind().code().to_le_bytes());
    out.extend_from_slice(&w.sample_rate().to_le_bytes());
    for s in w.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode_tcwf(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing TCWF header".into()));
    }
    let code = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let kind = WaveformKind::from_code(code)
        .ok_or_else(|| Error::Format(format!("unknown waveform kind {code}")))?;
    let rate = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(8) {
        return Err(Error::Format(
            "TCWF body is not a whole number of samples".into(),
        ));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Waveform::new(samples, rate, kind).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_tcwf(w: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tcwf(w))?;
    Ok(())
}

pub fn read_tcwf(path: impl AsRef<Path>) -> Result<Waveform> {
    decode_tcwf(&super::read_input(path.as_ref())?)
}

/// `time_s,value` text form, one row per sample.
pub fn waveform_to_csv(w: &Waveform) -> String {
    let mut out = String::from("time_s,value\n");
    for (i, s) in w.samples().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i as f64 / w.sample_rate(), s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout() {
        let w = Waveform::new(vec![1.0, -0.5], 80e9, WaveformKind::Photocurrent).unwrap();
        let b = encode_tcwf(&w);
        assert_eq!(b.len(), 32);
        assert_eq!(&b[..4], b"TCWF");
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[8..16], &80e9f64.to_le_bytes());
        assert_eq!(&b[24..32], &(-0.5f64).to_le_bytes());
        assert_eq!(decode_tcwf(&b).unwrap(), w);
    }

    #[test]
    fn rejects_corrupt_dumps() {
        let w = Waveform::new(vec![1.0], 1.0, WaveformKind::Voltage).unwrap();
        let mut b = encode_tcwf(&w);
        b.pop();
        assert!(matches!(decode_tcwf(&b), Err(Error::Format(_))));
        let mut b = encode_tcwf(&w);
        b[4] = 9;
        assert!(decode_tcwf(&b).is_err());
        assert!(decode_tcwf(b"TCW").is_err());
    }

    #[test]
    fn csv_rows() {
        let w = Waveform::new(vec![0.25, 0.5], 2.0, WaveformKind::Voltage).unwrap();
        assert_eq!(waveform_to_csv(&w), "time_s,value\n0,0.25\n0.5,0.5\n");
    }
}
