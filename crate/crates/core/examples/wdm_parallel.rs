//! Matrix product tiled over wavelengths and spatial channels, with and
//! without demultiplexer crosstalk.

use ndarray::Array2;
use tempocomp::wdm::{execute_plan, plan_matmul};
use tempocomp::PhotonicEngine;

fn main() -> tempocomp::Result<()> {
    let (m, n, l) = (6, 64, 4);
    let data = Array2::from_shape_fn((m, n), |(i, k)| ((i * 31 + k * 17) % 101) as f64 / 100.0);
    let weights = Array2::from_shape_fn((l, n), |(j, k)| {
        (((j * 13 + k * 7) % 41) as f64 - 20.0) / 20.0
    });
    let engine = PhotonicEngine::noiseless();
    let serial = engine.batched(data.view(), weights.view())?;

    let plan = plan_matmul(m, n, l, 3, 2)?;
    println!(
        "{} products on {} wavelengths x {} spatial channels: {} time slots",
        plan.assignments.len(),
        plan.n_wavelengths,
        plan.n_spatial,
        plan.n_slots()
    );
    for db in [f64::NEG_INFINITY, -40.0, -30.0, -20.0, -10.0] {
        let p = plan.clone().with_crosstalk(db)?;
        let out = execute_plan(data.view(), weights.view(), &p, &engine)?;
        let err = out
            .iter()
            .zip(&serial)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("crosstalk {db:>6} dB: max deviation from serial {err:.3e}");
    }
    Ok(())
}
