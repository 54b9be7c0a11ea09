//! Writes every stage of one frame as TCWF binary dumps plus a CSV of the
//! photocurrent, then reads one dump back.

use std::path::PathBuf;

use tempocomp::engine::{detect_frame, optical_frame};
use tempocomp::io::{read_tcwf, waveform_to_csv, write_tcwf};
use tempocomp::PhotonicEngine;

fn main() -> tempocomp::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let engine = PhotonicEngine::noiseless();
    let (data, weights) = ([0.2, 0.9, 0.5, 1.0], [1.0, -0.5, 0.0, -1.0]);
    let f = optical_frame(
        &engine.cfg,
        &data,
        &weights,
        0,
        engine.cal.found_sync_offset,
    )?;
    let (current, volts) = detect_frame(&engine.cfg, &f.upper, &f.lower, f.n_symbols, 0)?;

    for (name, w) in [
        ("data", &f.data),
        ("data_drive", &f.data_drive),
        ("weight_drive", &f.weight_drive),
        ("modulated", &f.modulated),
        ("upper", &f.upper),
        ("lower", &f.lower),
        ("photocurrent", &current),
    ] {
        let path = dir.join(format!("{name}.tcwf"));
        write_tcwf(w, &path)?;
        println!(
            "{name:>13}: {:?}, {} samples -> {}",
            w.kind(),
            w.len(),
            path.display()
        );
    }
    std::fs::write(dir.join("photocurrent.csv"), waveform_to_csv(&current))?;

    let back = read_tcwf(dir.join("photocurrent.tcwf"))?;
    assert_eq!(back, current);
    println!(
        "integrator reads {volts:.6e} V -> {:.6}",
        engine.cal.apply(volts)
    );
    Ok(())
}
