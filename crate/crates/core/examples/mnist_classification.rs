//! Conv + fully connected digit classifier: digital training, then inference
//! on the photonic engine with and without impairments.
//!
//! Run with `cargo run --release --example mnist_classification`.

use tempocomp::io::{load_mnist, resolve_data_dir, seeded_subset, ConfusionMatrix};
use tempocomp::nn::{gaussian_kernel, predict_digital, predict_photonic, train_fc_digital};
use tempocomp::nn::{ConvSpec, FeaturePath, TrainConfig};
use tempocomp::{EngineConfig, PhotonicEngine};

fn main() -> tempocomp::Result<()> {
    let data = load_mnist(&resolve_data_dir(None))?;
    let conv = ConvSpec::same(gaussian_kernel(5, 0.7))?;
    let fc = train_fc_digital(
        &data.train_images,
        &data.train_labels,
        &conv,
        &TrainConfig::default(),
    )?;
    println!("trained on {} digits", data.train_images.len());

    let subset = seeded_subset(data.test_images.len(), 100, 0)?;
    let quiet = PhotonicEngine::noiseless();
    let noisy = PhotonicEngine::calibrated(EngineConfig::default())?;

    let mut digital = ConfusionMatrix::new(10);
    let mut clean = ConfusionMatrix::new(10);
    let mut impaired = ConfusionMatrix::new(10);
    let mut parity = 0;
    for (k, &i) in subset.iter().enumerate() {
        let (img, label) = (&data.test_images[i], data.test_labels[i] as usize);
        let d = predict_digital(img, &conv, &fc)?;
        let (p, _) = predict_photonic(img, &conv, &fc, &quiet, FeaturePath::Photonic)?;
        let (n, _) = predict_photonic(
            img,
            &conv,
            &fc,
            &noisy.with_stream(k as u64),
            FeaturePath::Photonic,
        )?;
        parity += usize::from(d == p);
        digital.record(label, d)?;
        clean.record(label, p)?;
        impaired.record(label, n)?;
    }
    println!("digital accuracy      {:.2}", digital.accuracy());
    println!(
        "noiseless photonic    {:.2}  (argmax parity {parity}/100)",
        clean.accuracy()
    );
    println!("photonic with noise   {:.2}", impaired.accuracy());
    println!("\nconfusion matrix with noise:\n{}", impaired.to_csv());
    Ok(())
}
