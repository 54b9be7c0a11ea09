//! Recovers a deliberate delay between the data and weight streams with the
//! pilot correlation search, then shows the error it removes.

use tempocomp::engine::{calibrate, calibrate_gain, weighted_sum};
use tempocomp::oracle::dot_digital;
use tempocomp::EngineConfig;

fn main() -> tempocomp::Result<()> {
    let data: Vec<f64> = (0..32).map(|i| ((i * 7) % 11) as f64 / 10.0).collect();
    let weights: Vec<f64> = (0..32)
        .map(|i| (((i * 5) % 9) as f64 - 4.0) / 4.0)
        .collect();
    let exact = dot_digital(&data, &weights)?;

    for delay in [-11i64, -3, 0, 5, 16] {
        let cfg = EngineConfig {
            sync_offset: delay,
            ..EngineConfig::noiseless()
        };
        let blind = calibrate_gain(&cfg)?;
        let full = calibrate(&cfg)?;
        println!(
            "delay {delay:+3} samples: found {:+3}, error uncorrected {:+.3e}, corrected {:+.3e}",
            full.found_sync_offset,
            weighted_sum(&data, &weights, &cfg, &blind)? - exact,
            weighted_sum(&data, &weights, &cfg, &full)? - exact,
        );
    }
    Ok(())
}
