//! Exact digital references for every photonic operation.
//!
//! Nothing here touches the signal chain; convolution and detection are
//! direct loops over pixels rather than the patch streaming used by the
//! photonic path.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::nn::{ConvSpec, DetectionSpec, FcSpec};
use crate::signal::ImageTensor;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated dot product.
pub fn dot_digital(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim(format!(
            "dot of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(compensated_sum(a.iter().zip(b).map(|(x, y)| x * y)))
}

/// `data (M x N) * weights (L x N)^T`.
pub fn matmul_digital(data: ArrayView2<f64>, weights: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (m, n) = data.dim();
    let (l, n_w) = weights.dim();
    if n != n_w {
        return Err(Error::dim(format!("matmul inner dims {n} vs {n_w}")));
    }
    let mut out = Array2::zeros((m, l));
    for i in 0..m {
        for j in 0..l {
            out[[i, j]] = compensated_sum((0..n).map(|k| data[[i, k]] * weights[[j, k]]));
        }
    }
    Ok(out)
}

/// Zero-padded 2-D cross-correlation, before any rescaling.
pub fn conv2d_digital(img: &ImageTensor, spec: &ConvSpec) -> Result<Array2<f64>> {
    let (oh, ow) = spec.output_dims(img.height(), img.width())?;
    let k = spec.kernel_size();
    let pad = spec.padding as isize;
    let mut out = Array2::zeros((oh, ow));
    for oy in 0..oh {
        for ox in 0..ow {
            let y0 = (oy * spec.stride) as isize - pad;
            let x0 = (ox * spec.stride) as isize - pad;
            let terms = (0..k).flat_map(|ky| (0..k).map(move |kx| (ky, kx)));
            out[[oy, ox]] = compensated_sum(terms.map(|(ky, kx)| {
                spec.kernel[[ky, kx]] * img.get_padded(y0 + ky as isize, x0 + kx as isize)
            }));
        }
    }
    Ok(out)
}

/// Class scores `weights * v`.
pub fn fc_digital(v: &[f64], spec: &FcSpec) -> Result<Vec<f64>> {
    let (_, d) = spec.weights.dim();
    if v.len() != d {
        return Err(Error::dim(format!(
            "FC expects {d} inputs, got {}",
            v.len()
        )));
    }
    spec.weights
        .rows()
        .into_iter()
        .map(|row| dot_digital(row.as_slice().expect("standard layout"), v))
        .collect()
}

/// P x C matrix of window/classifier dot products, patches in row-major
/// order.
pub fn detect_digital(img: &ImageTensor, spec: &DetectionSpec) -> Result<Array2<f64>> {
    let (gy, gx) = spec.grid(img.height(), img.width())?;
    let w = spec.window;
    let mut out = Array2::zeros((gy * gx, spec.classifiers.len()));
    for py in 0..gy {
        for px in 0..gx {
            let (top, left) = (py * spec.stride, px * spec.stride);
            for (c, (_, tmpl)) in spec.classifiers.iter().enumerate() {
                out[[py * gx + px, c]] = compensated_sum(
                    (0..w)
                        .flat_map(|y| (0..w).map(move |x| (y, x)))
                        .map(|(y, x)| tmpl[[y, x]] * img.get(top + y, left + x)),
                );
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dot_examples() {
        assert_eq!(dot_digital(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(dot_digital(&[0.3, 0.2], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            dot_digital(&[0.0, 1.0, 0.0], &[0.4, -0.6, 0.9]).unwrap(),
            -0.6
        );
        assert!(dot_digital(&[1.0], &[]).is_err());
    }

    #[test]
    fn compensation_beats_naive_sum() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn conv_examples() {
        let img =
            ImageTensor::new(3, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]).unwrap();
        let mut delta = Array2::zeros((3, 3));
        delta[[1, 1]] = 1.0;
        let out = conv2d_digital(&img, &ConvSpec::new(delta, 1, 1).unwrap()).unwrap();
        assert_eq!(out.as_slice().unwrap(), img.pixels());

        let ones = ImageTensor::new(3, 3, vec![1.0; 9]).unwrap();
        let out =
            conv2d_digital(&ones, &ConvSpec::new(Array2::ones((3, 3)), 0, 1).unwrap()).unwrap();
        assert_eq!(out, array![[9.0]]);
    }

    #[test]
    fn conv_matches_patchwise_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img =
            ImageTensor::new(8, 8, (0..64).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap();
        let kernel = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-1.0..=1.0));
        let spec = ConvSpec::new(kernel.clone(), 1, 1).unwrap();
        let out = conv2d_digital(&img, &spec).unwrap();
        for oy in 0..8 {
            for ox in 0..8 {
                let mut patch = Vec::new();
                for ky in 0..3 {
                    for kx in 0..3 {
                        patch.push(img.get_padded(oy as isize + ky - 1, ox as isize + kx - 1));
                    }
                }
                let flat: Vec<f64> = kernel.iter().copied().collect();
                assert_eq!(out[[oy, ox]], dot_digital(&patch, &flat).unwrap());
            }
        }
    }

    #[test]
    fn fc_and_detect_examples() {
        let spec = FcSpec::new(Array2::eye(3), None).unwrap();
        assert_eq!(
            fc_digital(&[0.1, 0.5, 0.9], &spec).unwrap(),
            vec![0.1, 0.5, 0.9]
        );
        assert!(fc_digital(&[0.1], &spec).is_err());

        let det = DetectionSpec::new(
            2,
            1,
            vec![
                ("a".into(), Array2::ones((2, 2))),
                ("b".into(), -Array2::<f64>::ones((2, 2))),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let zero = ImageTensor::zeros(3, 3);
        assert!(detect_digital(&zero, &det)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn fc_and_detect_reduce_to_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = Array2::from_shape_fn((4, 16), |_| rng.gen_range(-1.0..=1.0));
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let spec = FcSpec::new(w.clone(), None).unwrap();
        let scores = fc_digital(&v, &spec).unwrap();
        for (c, row) in w.rows().into_iter().enumerate() {
            assert_eq!(scores[c], dot_digital(&row.to_vec(), &v).unwrap());
        }

        let img =
            ImageTensor::new(6, 6, (0..36).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap();
        let tmpl = Array2::from_shape_fn((4, 4), |_| rng.gen_range(-1.0..=1.0));
        let det = DetectionSpec::new(4, 2, vec![("t".into(), tmpl.clone())], vec![0.0]).unwrap();
        let m = detect_digital(&img, &det).unwrap();
        assert_eq!(m.dim(), (4, 1));
        let patch = img.crop(2, 2, 4).unwrap();
        let flat: Vec<f64> = tmpl.iter().copied().collect();
        assert_eq!(m[[3, 0]], dot_digital(patch.pixels(), &flat).unwrap());
    }
}
