//! A single weighted sum through the simulated optical chain, next to the
//! exact digital value.

use tempocomp::oracle::dot_digital;
use tempocomp::{EngineConfig, Fidelity, PhotonicEngine};

fn main() -> tempocomp::Result<()> {
    let data = [0.1, 0.3, 0.5, 0.7, 0.9];
    let weights = [0.5, -0.25, 1.0, -1.0, 0.75];
    let exact = dot_digital(&data, &weights)?;
    println!("digital            {exact:+.12}");

    let ideal = PhotonicEngine::noiseless();
    println!(
        "linearized         {:+.12}",
        ideal.weighted_sum(&data, &weights)?
    );

    let physical = PhotonicEngine::calibrated(EngineConfig {
        fidelity: Fidelity::Physical,
        ..EngineConfig::noiseless()
    })?;
    println!(
        "physical           {:+.12}",
        physical.weighted_sum(&data, &weights)?
    );

    let noisy = PhotonicEngine::calibrated(EngineConfig::default())?;
    for seed in 0..3 {
        let e = noisy.with_stream(seed);
        println!(
            "with noise (#{seed})    {:+.12}",
            e.weighted_sum(&data, &weights)?
        );
    }
    println!(
        "gain {:.6} V per unit, offset {:.3e} V",
        ideal.cal.gain, ideal.cal.residual_offset
    );
    Ok(())
}
