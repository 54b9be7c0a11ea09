//! Digital training of the linear layers that the photonic engine later
//! executes. Training never touches the simulated hardware.

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::conv::{conv2d_photonic, rescale_unit, ConvSpec, FeatureMap};
use super::detect::{compose_scene, DetectionSpec, Placement};
use super::{classify, fc_forward_photonic, FcSpec};
use crate::engine::PhotonicEngine;
use crate::error::{Error, Result};
use crate::oracle::{conv2d_digital, fc_digital};
use crate::signal::ImageTensor;

/// Mini-batch SGD settings. The step size decays as `lr / (1 + decay * epoch)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.5,
            lr_decay: 0.3,
            batch_size: 64,
            rng_seed: 0,
        }
    }
}

const N_DIGITS: usize = 10;

/// Digital convolution followed by the `[0, 1]` rescale.
pub fn digital_features(img: &ImageTensor, conv: &ConvSpec) -> Result<FeatureMap> {
    rescale_unit(conv2d_digital(img, conv)?)
}

/// Where the convolution layer of a photonic prediction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturePath {
    /// Exact digital feature map, photonic FC layer.
    Digital,
    /// Both layers on the photonic engine.
    Photonic,
}

pub fn predict_digital(img: &ImageTensor, conv: &ConvSpec, fc: &FcSpec) -> Result<usize> {
    let fm = digital_features(img, conv)?;
    classify(&fc_digital(fm.image.pixels(), fc)?)
}

/// Runs the classifier on `engine`. The conv and FC layers draw noise from
/// separate substreams of the engine's generator.
pub fn predict_photonic(
    img: &ImageTensor,
    conv: &ConvSpec,
    fc: &FcSpec,
    engine: &PhotonicEngine,
    path: FeaturePath,
) -> Result<(usize, Vec<f64>)> {
    let fm = match path {
        FeaturePath::Digital => digital_features(img, conv)?,
        FeaturePath::Photonic => conv2d_photonic(img, conv, &engine.with_stream(0xC0))?,
    };
    let scores = fc_forward_photonic(fm.image.pixels(), fc, &engine.with_stream(0xFC))?;
    Ok((classify(&scores)?, scores))
}

fn check_labels(n_images: usize, labels: &[u8]) -> Result<()> {
    if n_images == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    if labels.len() != n_images {
        return Err(Error::Data(format!(
            "{} labels for {n_images} images",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l as usize >= N_DIGITS) {
        return Err(Error::Data(format!("label {bad} outside 0..9")));
    }
    Ok(())
}

fn stack_rows(rows: &[Vec<f64>]) -> Array2<f64> {
    let d = rows.first().map_or(0, Vec::len);
    let mut out = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&Array1::from(r.clone()));
    }
    out
}

/// Scales `w` so its largest magnitude is 1. Positive scaling leaves every
/// argmax and every threshold ordering unchanged.
fn renormalize(w: &mut Array2<f64>) -> f64 {
    let peak = w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if peak > 0.0 {
        w.mapv_inplace(|v| (v / peak).clamp(-1.0, 1.0));
    }
    peak
}

/// Softmax regression (no bias, which the dot-product engine cannot add) on
/// rescaled conv features, then renormalized to max-abs 1.
pub fn train_fc_digital(
    images: &[ImageTensor],
    labels: &[u8],
    conv: &ConvSpec,
    cfg: &TrainConfig,
) -> Result<FcSpec> {
    check_labels(images.len(), labels)?;
    let feats: Result<Vec<Vec<f64>>> = images
        .par_iter()
        .map(|img| Ok(digital_features(img, conv)?.image.pixels().to_vec()))
        .collect();
    let x = stack_rows(&feats?);
    let n = x.nrows();
    let d = x.ncols();
    let mut w = Array2::<f64>::zeros((N_DIGITS, d));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..n).collect();
    let bs = cfg.batch_size.max(1);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate / (1.0 + cfg.lr_decay * epoch as f64);
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            let xb = x.select(Axis(0), chunk);
            let mut p = xb.dot(&w.t());
            for (mut row, &idx) in p.rows_mut().into_iter().zip(chunk) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                row.mapv_inplace(|z| (z - max).exp());
                let sum = row.sum();
                row.mapv_inplace(|z| z / sum);
                row[labels[idx] as usize] -= 1.0;
            }
            let grad = p.t().dot(&xb);
            w.scaled_add(-lr / chunk.len() as f64, &grad);
        }
    }
    renormalize(&mut w);
    FcSpec::new(w, None)
}

/// Samples a blank `size` x `size` canvas carrying `n_digits` non-overlapping
/// digits on the stride grid. Returns the scene and the label of every grid
/// cell (None where no digit is aligned with the window).
pub fn random_scene(
    rng: &mut impl Rng,
    pool: &[(ImageTensor, u8)],
    n_digits: usize,
    size: usize,
    window: usize,
    stride: usize,
) -> Result<(ImageTensor, Vec<Option<u8>>)> {
    if pool.is_empty() {
        return Err(Error::Data("empty digit pool".into()));
    }
    if size < window || !(size - window).is_multiple_of(stride) {
        return Err(Error::dim(format!(
            "canvas {size} does not tile with window {window}, stride {stride}"
        )));
    }
    let cells = (size - window) / stride + 1;
    let min_gap = window.div_ceil(stride);
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut stuck = 0;
    let mut restarts = 0;
    while chosen.len() < n_digits {
        if stuck > 100 {
            // an early pick can block every remaining cell; start over
            chosen.clear();
            stuck = 0;
            restarts += 1;
            if restarts > 100 {
                return Err(Error::Data(format!(
                    "cannot place {n_digits} digits without overlap"
                )));
            }
        }
        let cell = (rng.gen_range(0..cells), rng.gen_range(0..cells));
        let clear = chosen
            .iter()
            .all(|&(r, c)| r.abs_diff(cell.0) >= min_gap || c.abs_diff(cell.1) >= min_gap);
        if clear {
            chosen.push(cell);
        } else {
            stuck += 1;
        }
    }
    let mut labels = vec![None; cells * cells];
    let mut placements = Vec::with_capacity(n_digits);
    for &(r, c) in &chosen {
        let (img, label) = &pool[rng.gen_range(0..pool.len())];
        labels[r * cells + c] = Some(*label);
        placements.push(Placement {
            image: img.clone(),
            grid_row: r,
            grid_col: c,
        });
    }
    Ok((compose_scene(size, stride, &placements)?, labels))
}

/// Flattened window patches of many scenes with their cell labels.
pub fn scene_patches(
    rng: &mut impl Rng,
    pool: &[(ImageTensor, u8)],
    n_scenes: usize,
    size: usize,
    window: usize,
    stride: usize,
) -> Result<(Array2<f64>, Vec<Option<u8>>)> {
    let probe = DetectionSpec::new(
        window,
        stride,
        vec![(String::new(), Array2::zeros((window, window)))],
        vec![0.0],
    )?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_scenes {
        let (scene, cell_labels) = random_scene(rng, pool, 3, size, window, stride)?;
        let p = probe.patches(&scene)?;
        rows.extend(p.rows().into_iter().map(|r| r.to_vec()));
        labels.extend(cell_labels);
    }
    Ok((stack_rows(&rows), labels))
}

/// Per-class threshold halfway between the highest-scoring negative patch and
/// the lowest-scoring positive patch.
pub fn calibrate_thresholds(
    templates: &Array2<f64>,
    classes: &[u8],
    patches: &Array2<f64>,
    patch_labels: &[Option<u8>],
) -> Result<Vec<f64>> {
    let scores = patches.dot(&templates.t());
    classes
        .iter()
        .enumerate()
        .map(|(c, &class)| {
            let mut max_neg = f64::NEG_INFINITY;
            let mut min_pos = f64::INFINITY;
            for (p, label) in patch_labels.iter().enumerate() {
                let s = scores[[p, c]];
                if *label == Some(class) {
                    min_pos = min_pos.min(s);
                } else {
                    max_neg = max_neg.max(s);
                }
            }
            if !min_pos.is_finite() || !max_neg.is_finite() {
                return Err(Error::Data(format!(
                    "calibration set lacks positives or negatives for class {class}"
                )));
            }
            Ok(0.5 * (max_neg + min_pos))
        })
        .collect()
}

/// Settings for [`train_detector_digital`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorTrainConfig {
    pub window: usize,
    pub stride: usize,
    /// Side of the synthetic training scenes.
    pub scene_size: usize,
    pub train_scenes: usize,
    pub calibration_scenes: usize,
    pub sgd: TrainConfig,
}

impl Default for DetectorTrainConfig {
    fn default() -> Self {
        Self {
            window: 28,
            stride: 10,
            scene_size: 68,
            train_scenes: 3000,
            calibration_scenes: 600,
            sgd: TrainConfig {
                epochs: 8,
                learning_rate: 0.05,
                lr_decay: 0.3,
                batch_size: 64,
                rng_seed: 0,
            },
        }
    }
}

/// One-vs-rest logistic templates for `classes`, trained on window patches of
/// synthetic multi-digit scenes and thresholded on scenes built from a
/// separate calibration pool. The logistic bias is dropped; the calibrated
/// threshold takes its place.
pub fn train_detector_digital(
    train: &[(ImageTensor, u8)],
    calibration: &[(ImageTensor, u8)],
    classes: &[u8],
    cfg: &DetectorTrainConfig,
) -> Result<DetectionSpec> {
    if train.is_empty() || calibration.is_empty() {
        return Err(Error::Data(
            "empty detector training or calibration pool".into(),
        ));
    }
    if classes.is_empty() {
        return Err(Error::Config("no detector classes requested".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sgd.rng_seed);
    let (x, labels) = scene_patches(
        &mut rng,
        train,
        cfg.train_scenes,
        cfg.scene_size,
        cfg.window,
        cfg.stride,
    )?;
    let (n, d) = x.dim();
    let k = classes.len();
    let targets = Array2::from_shape_fn((n, k), |(i, c)| {
        f64::from(u8::from(labels[i] == Some(classes[c])))
    });
    let pos: Vec<f64> = (0..k).map(|c| targets.column(c).sum()).collect();
    if pos.contains(&0.0) {
        return Err(Error::Data(
            "a detector class has no training positives".into(),
        ));
    }
    // balance positives against the far more numerous negatives
    let pos_weight: Array1<f64> = pos.iter().map(|&p| (n as f64 - p) / p).collect();

    let mut w = Array2::<f64>::zeros((k, d));
    let mut b = Array1::<f64>::zeros(k);
    let mut order: Vec<usize> = (0..n).collect();
    let bs = cfg.sgd.batch_size.max(1);
    for epoch in 0..cfg.sgd.epochs {
        let lr = cfg.sgd.learning_rate / (1.0 + cfg.sgd.lr_decay * epoch as f64);
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            let xb = x.select(Axis(0), chunk);
            let yb = targets.select(Axis(0), chunk);
            let mut g = xb.dot(&w.t()) + &b;
            g.zip_mut_with(&yb, |z, &y| {
                let p = 1.0 / (1.0 + (-*z).exp());
                *z = p - y;
            });
            // positive examples weigh pos_weight, negatives 1
            for (mut row, yrow) in g.rows_mut().into_iter().zip(yb.rows()) {
                for c in 0..k {
                    if yrow[c] > 0.5 {
                        row[c] *= pos_weight[c];
                    }
                }
            }
            let scale = lr / chunk.len() as f64;
            w.scaled_add(-scale, &g.t().dot(&xb));
            b.scaled_add(-scale, &g.sum_axis(Axis(0)));
        }
    }
    for mut row in w.rows_mut() {
        let peak = row.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if peak > 0.0 {
            row.mapv_inplace(|v| (v / peak).clamp(-1.0, 1.0));
        }
    }

    let (xc, lc) = scene_patches(
        &mut rng,
        calibration,
        cfg.calibration_scenes,
        cfg.scene_size,
        cfg.window,
        cfg.stride,
    )?;
    let thresholds = calibrate_thresholds(&w, classes, &xc, &lc)?;
    let classifiers = classes
        .iter()
        .enumerate()
        .map(|(c, &class)| {
            let t = w
                .slice(s![c, ..])
                .to_owned()
                .into_shape((cfg.window, cfg.window))
                .expect("window^2 taps");
            (class.to_string(), t)
        })
        .collect();
    DetectionSpec::new(cfg.window, cfg.stride, classifiers, thresholds)
}
