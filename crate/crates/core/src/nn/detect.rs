use ndarray::Array2;

use super::check_weight_range;
use crate::engine::PhotonicEngine;
use crate::error::{Error, Result};
use crate::signal::ImageTensor;

/// Sliding-window detector: a square window stepped over the image on a
/// regular grid, scored against one linear template per label.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSpec {
    pub window: usize,
    pub stride: usize,
    /// `(label, window x window template)`.
    pub classifiers: Vec<(String, Array2<f64>)>,
    /// Decision threshold per classifier.
    pub thresholds: Vec<f64>,
}

impl DetectionSpec {
    pub fn new(
        window: usize,
        stride: usize,
        classifiers: Vec<(String, Array2<f64>)>,
        thresholds: Vec<f64>,
    ) -> Result<Self> {
        if window == 0 || stride == 0 {
            return Err(Error::Config("window and stride must be positive".into()));
        }
        if classifiers.is_empty() {
            return Err(Error::Config(
                "detector needs at least one classifier".into(),
            ));
        }
        if thresholds.len() != classifiers.len() {
            return Err(Error::dim(format!(
                "{} thresholds for {} classifiers",
                thresholds.len(),
                classifiers.len()
            )));
        }
        for (label, t) in &classifiers {
            if t.dim() != (window, window) {
                return Err(Error::dim(format!(
                    "classifier {label} is {:?}, window is {window}",
                    t.dim()
                )));
            }
            check_weight_range(t.iter())?;
        }
        let classifiers = classifiers
            .into_iter()
            .map(|(l, t)| (l, t.as_standard_layout().to_owned()))
            .collect();
        Ok(Self {
            window,
            stride,
            classifiers,
            thresholds,
        })
    }

    /// Patch grid `(rows, cols)`; the image must tile exactly.
    pub fn grid(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let axis = |len: usize, name: &str| -> Result<usize> {
            if len < self.window || !(len - self.window).is_multiple_of(self.stride) {
                return Err(Error::dim(format!(
                    "image {name} {len} does not tile with window {} and stride {}",
                    self.window, self.stride
                )));
            }
            Ok((len - self.window) / self.stride + 1)
        };
        Ok((axis(height, "height")?, axis(width, "width")?))
    }

    pub fn template_matrix(&self) -> Array2<f64> {
        let d = self.window * self.window;
        let mut out = Array2::zeros((self.classifiers.len(), d));
        for (c, (_, t)) in self.classifiers.iter().enumerate() {
            out.row_mut(c).assign(&ndarray::ArrayView1::from(
                t.as_slice().expect("standard layout"),
            ));
        }
        out
    }

    /// Flattened patches, row-major over the grid.
    pub fn patches(&self, img: &ImageTensor) -> Result<Array2<f64>> {
        let (gy, gx) = self.grid(img.height(), img.width())?;
        let mut out = Array2::zeros((gy * gx, self.window * self.window));
        for py in 0..gy {
            for px in 0..gx {
                let crop = img.crop(py * self.stride, px * self.stride, self.window)?;
                out.row_mut(py * gx + px)
                    .assign(&ndarray::ArrayView1::from(crop.pixels()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub label: String,
    /// 1-based, row-major over the patch grid.
    pub patch_index: usize,
    pub decision_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutput {
    /// P x C decision values.
    pub decisions: Array2<f64>,
    pub detections: Vec<Detection>,
}

/// Streams every patch against every template through the engine and keeps
/// the entries above their label's threshold.
pub fn sliding_window_detect(
    img: &ImageTensor,
    spec: &DetectionSpec,
    engine: &PhotonicEngine,
) -> Result<DetectionOutput> {
    let patches = spec.patches(img)?;
    let decisions = engine.batched(patches.view(), spec.template_matrix().view())?;
    Ok(DetectionOutput {
        detections: threshold_decisions(&decisions, spec),
        decisions,
    })
}

pub(crate) fn threshold_decisions(decisions: &Array2<f64>, spec: &DetectionSpec) -> Vec<Detection> {
    let mut out = Vec::new();
    for (p, row) in decisions.rows().into_iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v > spec.thresholds[c] {
                out.push(Detection {
                    label: spec.classifiers[c].0.clone(),
                    patch_index: p + 1,
                    decision_value: v,
                });
            }
        }
    }
    out
}

/// A digit image placed on the patch grid.
#[derive(Debug, Clone)]
pub struct Placement {
    pub image: ImageTensor,
    pub grid_row: usize,
    pub grid_col: usize,
}

/// Pastes each placement at `(grid_row * stride, grid_col * stride)` on a
/// blank `size` x `size` canvas. Placements must not overlap.
pub fn compose_scene(size: usize, stride: usize, placements: &[Placement]) -> Result<ImageTensor> {
    let mut canvas = ImageTensor::zeros(size, size);
    for (i, p) in placements.iter().enumerate() {
        let (top, left) = (p.grid_row * stride, p.grid_col * stride);
        if top + p.image.height() > size || left + p.image.width() > size {
            return Err(Error::dim(format!(
                "placement {i} falls outside the {size}x{size} canvas"
            )));
        }
        for q in &placements[..i] {
            let (qt, ql) = (q.grid_row * stride, q.grid_col * stride);
            let overlap_y = top < qt + q.image.height() && qt < top + p.image.height();
            let overlap_x = left < ql + q.image.width() && ql < left + p.image.width();
            if overlap_y && overlap_x {
                return Err(Error::dim(format!("placement {i} overlaps an earlier one")));
            }
        }
        canvas.paste_max(&p.image, top, left);
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::detect_digital;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(window: usize, stride: usize, n: usize, seed: u64) -> DetectionSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classifiers = (0..n)
            .map(|c| {
                (
                    c.to_string(),
                    Array2::from_shape_fn((window, window), |_| rng.gen_range(-1.0..=1.0)),
                )
            })
            .collect();
        DetectionSpec::new(window, stride, classifiers, vec![0.5; n]).unwrap()
    }

    #[test]
    fn grid_counts() {
        let s = spec(28, 10, 1, 0);
        assert_eq!(s.grid(68, 68).unwrap(), (5, 5));
        assert!(matches!(s.grid(70, 68), Err(Error::Dimension(_))));
        assert!(s.grid(20, 20).is_err());
        for (h, w, k, st) in [(10, 10, 4, 3), (9, 13, 5, 2), (7, 7, 7, 1)] {
            let s = spec(k, st, 1, 1);
            let (gy, gx) = s.grid(h, w).unwrap();
            assert_eq!(
                s.patches(&ImageTensor::zeros(h, w)).unwrap().nrows(),
                gy * gx
            );
            assert_eq!(gy, (h - k) / st + 1);
        }
    }

    #[test]
    fn zero_image_yields_nothing() {
        let s = spec(28, 10, 3, 2);
        let out = sliding_window_detect(
            &ImageTensor::zeros(68, 68),
            &s,
            &PhotonicEngine::noiseless(),
        )
        .unwrap();
        assert_eq!(out.decisions.dim(), (25, 3));
        assert!(out.detections.is_empty());
    }

    #[test]
    fn decisions_match_oracle() {
        let s = spec(6, 3, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img =
            ImageTensor::new(12, 15, (0..180).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap();
        let out = sliding_window_detect(&img, &s, &PhotonicEngine::noiseless()).unwrap();
        let want = detect_digital(&img, &s).unwrap();
        for (a, b) in out.decisions.iter().zip(want.iter()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
        }
    }

    #[test]
    fn detections_are_one_based_row_major() {
        let s =
            DetectionSpec::new(1, 1, vec![("x".into(), Array2::ones((1, 1)))], vec![0.5]).unwrap();
        let img = ImageTensor::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let out = sliding_window_detect(&img, &s, &PhotonicEngine::noiseless()).unwrap();
        assert_eq!(out.detections.len(), 1);
        assert_eq!(out.detections[0].patch_index, 3);
    }

    #[test]
    fn scene_composition() {
        let digit = ImageTensor::new(28, 28, vec![1.0; 784]).unwrap();
        let place = |r, c| Placement {
            image: digit.clone(),
            grid_row: r,
            grid_col: c,
        };
        let scene = compose_scene(68, 10, &[place(2, 0), place(0, 3)]).unwrap();
        assert_eq!(scene.get(20, 0), 1.0);
        assert_eq!(scene.get(19, 0), 0.0);
        assert_eq!(scene.get(0, 30), 1.0);
        assert!(compose_scene(68, 10, &[place(0, 0), place(1, 1)]).is_err());
        assert!(compose_scene(68, 10, &[place(5, 0)]).is_err());
    }
}
