use ndarray::Array2;

use super::check_weight_range;
use crate::engine::PhotonicEngine;
use crate::error::{Error, Result};
use crate::signal::ImageTensor;

/// Square convolution kernel with zero padding and stride.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec {
    /// K x K, entries in `[-1, 1]`.
    pub kernel: Array2<f64>,
    pub padding: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub fn new(kernel: Array2<f64>, padding: usize, stride: usize) -> Result<Self> {
        let (kh, kw) = kernel.dim();
        if kh == 0 || kh != kw {
            return Err(Error::dim(format!(
                "kernel must be square and non-empty, got {kh}x{kw}"
            )));
        }
        if stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        check_weight_range(kernel.iter())?;
        Ok(Self {
            kernel: kernel.as_standard_layout().to_owned(),
            padding,
            stride,
        })
    }

    /// Kernel with "same" padding (`K / 2`) and unit stride.
    pub fn same(kernel: Array2<f64>) -> Result<Self> {
        let pad = kernel.nrows() / 2;
        Self::new(kernel, pad, 1)
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let k = self.kernel_size();
        let (ph, pw) = (height + 2 * self.padding, width + 2 * self.padding);
        if ph < k || pw < k {
            return Err(Error::dim(format!(
                "{k}x{k} kernel does not fit a padded {ph}x{pw} image"
            )));
        }
        Ok(((ph - k) / self.stride + 1, (pw - k) / self.stride + 1))
    }

    /// One flattened (zero-padded) patch per output pixel, row-major.
    pub fn patches(&self, img: &ImageTensor) -> Result<Array2<f64>> {
        let (oh, ow) = self.output_dims(img.height(), img.width())?;
        let k = self.kernel_size();
        let pad = self.padding as isize;
        let mut out = Array2::zeros((oh * ow, k * k));
        for oy in 0..oh {
            for ox in 0..ow {
                let mut row = out.row_mut(oy * ow + ox);
                let y0 = (oy * self.stride) as isize - pad;
                let x0 = (ox * self.stride) as isize - pad;
                for ky in 0..k {
                    for kx in 0..k {
                        row[ky * k + kx] = img.get_padded(y0 + ky as isize, x0 + kx as isize);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// 4-neighbour Laplacian scaled by 1/4 so every tap fits the weight range.
pub fn laplacian_kernel() -> Array2<f64> {
    ndarray::arr2(&[[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]) / 4.0
}

/// `size` x `size` Gaussian with peak value 1.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Array2<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    Array2::from_shape_fn((size, size), |(y, x)| {
        let (dy, dx) = (y as f64 - c, x as f64 - c);
        (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp()
    })
}

/// Convolution output with its `[0, 1]` rescaled version.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// Values before rescaling.
    pub raw: Array2<f64>,
    /// `raw = offset + scale * image`.
    pub image: ImageTensor,
    pub offset: f64,
    /// Zero for a constant map, whose image is all zeros.
    pub scale: f64,
}

/// Affine min-max rescale of a map into `[0, 1]`.
pub fn rescale_unit(raw: Array2<f64>) -> Result<FeatureMap> {
    let (h, w) = raw.dim();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = hi - lo;
    let pixels = if scale > 0.0 {
        raw.iter()
            .map(|&v| ((v - lo) / scale).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; h * w]
    };
    Ok(FeatureMap {
        image: ImageTensor::new(h, w, pixels)?,
        raw,
        offset: lo,
        scale: scale.max(0.0),
    })
}

/// Convolution computed as one photonic frame per output pixel: the patch is
/// the data vector, the flattened kernel the weight vector.
pub fn conv2d_photonic(
    img: &ImageTensor,
    spec: &ConvSpec,
    engine: &PhotonicEngine,
) -> Result<FeatureMap> {
    let (oh, ow) = spec.output_dims(img.height(), img.width())?;
    let patches = spec.patches(img)?;
    let k2 = spec.kernel_size().pow(2);
    let kernel_row = spec
        .kernel
        .clone()
        .into_shape((1, k2))
        .map_err(|e| Error::dim(e.to_string()))?;
    let col = engine.batched(patches.view(), kernel_row.view())?;
    let raw = col
        .into_shape((oh, ow))
        .map_err(|e| Error::dim(e.to_string()))?;
    rescale_unit(raw)
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::dim(format!(
            "pearson needs two equal-length series, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Numeric("pearson of a constant series".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
