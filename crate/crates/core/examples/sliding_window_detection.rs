//! Finds digits 0, 4 and 8 in a 68x68 scene by sliding a 28x28 window with
//! stride 10 and thresholding one linear template per digit.

use std::time::Instant;

use ndarray::Array2;
use tempocomp::io::{load_mnist, resolve_data_dir};
use tempocomp::nn::{
    compose_scene, sliding_window_detect, train_detector_digital, DetectorTrainConfig, Placement,
};
use tempocomp::oracle::detect_digital;
use tempocomp::PhotonicEngine;

fn main() -> tempocomp::Result<()> {
    let data = load_mnist(&resolve_data_dir(None))?;
    let pool: Vec<_> = data
        .train_images
        .iter()
        .cloned()
        .zip(data.train_labels.iter().copied())
        .collect();
    let (train, calibration) = pool.split_at(pool.len() * 8 / 9);

    let t = Instant::now();
    let spec = train_detector_digital(
        train,
        calibration,
        &[0, 4, 8],
        &DetectorTrainConfig::default(),
    )?;
    println!(
        "trained detector in {:.1?}, thresholds {:?}",
        t.elapsed(),
        spec.thresholds
    );

    let first = |digit: u8| {
        let i = data
            .test_labels
            .iter()
            .position(|&l| l == digit)
            .expect("digit present");
        data.test_images[i].clone()
    };
    let layout = [(0u8, 2, 0), (4, 0, 3), (8, 4, 3)];
    let placements: Vec<Placement> = layout
        .iter()
        .map(|&(d, r, c)| Placement {
            image: first(d),
            grid_row: r,
            grid_col: c,
        })
        .collect();
    let scene = compose_scene(68, 10, &placements)?;

    let out = sliding_window_detect(&scene, &spec, &PhotonicEngine::noiseless())?;
    let oracle: Array2<f64> = detect_digital(&scene, &spec)?;
    let worst = out
        .decisions
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "{} patches, max deviation from oracle {worst:.2e}",
        out.decisions.nrows()
    );
    for &(d, r, c) in &layout {
        println!("digit {d} placed at patch {}", r * 5 + c + 1);
    }
    for det in &out.detections {
        println!(
            "detected {} at patch {:2} (score {:.3})",
            det.label, det.patch_index, det.decision_value
        );
    }
    Ok(())
}
