//! Neural-network layers that run on the photonic engine.
//!
//! Both layers of the classifier are plain linear maps: a convolution whose
//! patches stream through the engine as consecutive frames, and a fully
//! connected layer whose rows do the same. There is no activation between
//! them; the only inter-layer step is an affine min-max rescale that brings
//! the feature map back into the data modulator's `[0, 1]` range.

mod conv;
mod detect;
mod train;

use ndarray::Array2;

pub use conv::{
    conv2d_photonic, gaussian_kernel, laplacian_kernel, pearson, rescale_unit, ConvSpec, FeatureMap,
};
pub use detect::{
    compose_scene, sliding_window_detect, Detection, DetectionOutput, DetectionSpec, Placement,
};
pub use train::{
    calibrate_thresholds, digital_features, predict_digital, predict_photonic, random_scene,
    scene_patches, train_detector_digital, train_fc_digital, DetectorTrainConfig, FeaturePath,
    TrainConfig,
};

use crate::engine::PhotonicEngine;
use crate::error::{Error, Result};

/// Fully connected classifier: one weight row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct FcSpec {
    /// C x D, entries in `[-1, 1]`.
    pub weights: Array2<f64>,
    pub class_labels: Vec<String>,
}

impl FcSpec {
    /// Labels default to the class indices.
    pub fn new(weights: Array2<f64>, class_labels: Option<Vec<String>>) -> Result<Self> {
        let (c, d) = weights.dim();
        if c == 0 || d == 0 {
            return Err(Error::dim(format!(
                "FC weights must be non-empty, got {c}x{d}"
            )));
        }
        check_weight_range(weights.iter())?;
        let class_labels = class_labels.unwrap_or_else(|| (0..c).map(|i| i.to_string()).collect());
        if class_labels.len() != c {
            return Err(Error::dim(format!(
                "{} labels for {c} classes",
                class_labels.len()
            )));
        }
        Ok(Self {
            weights: weights.as_standard_layout().to_owned(),
            class_labels,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.weights.ncols()
    }
}

pub(crate) fn check_weight_range<'a>(values: impl Iterator<Item = &'a f64>) -> Result<()> {
    for (index, &value) in values.enumerate() {
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite weight at index {index}"
            )));
        }
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::Range {
                index,
                value,
                allowed: "[-1, 1] for weights",
            });
        }
    }
    Ok(())
}

/// Class scores of `v`, one photonic frame per class row.
pub fn fc_forward_photonic(v: &[f64], spec: &FcSpec, engine: &PhotonicEngine) -> Result<Vec<f64>> {
    if v.len() != spec.n_inputs() {
        return Err(Error::dim(format!(
            "FC expects {} inputs, got {}",
            spec.n_inputs(),
            v.len()
        )));
    }
    let data = Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row vector");
    let out = engine.batched(data.view(), spec.weights.view())?;
    Ok(out.row(0).to_vec())
}

/// Index of the largest score; ties go to the lowest index.
pub fn classify(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::dim("cannot classify an empty score vector"));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("NaN score at index {i}")));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}
