use super::{resize_bilinear, ImageBuffer};
use crate::error::{Error, Result};

/// One level of a downscaling pyramid.
#[derive(Clone, Debug)]
pub struct PyramidLevel {
    /// Ratio of this level to the original, in `(0, 1]`.
    pub scale: f64,
    pub image: ImageBuffer,
}

/// Scales `1, 1/f, 1/f^2, ...` kept while `min(w, h) * scale >= min_side`.
pub(crate) fn pyramid_scales(
    width: usize,
    height: usize,
    scale_factor: f64,
    min_side: usize,
) -> Vec<f64> {
    let min_dim = width.min(height) as f64;
    let mut scales = Vec::new();
    let mut k = 0;
    loop {
        let divisor = scale_factor.powi(k);
        if min_dim / divisor < min_side as f64 * (1.0 - 1e-12) {
            break;
        }
        scales.push(1.0 / divisor);
        k += 1;
    }
    scales
}

/// Progressively downscaled copies of `img`, largest first.
///
/// An empty list is returned when `min_side` exceeds the smaller image side.
pub fn build_pyramid(
    img: &ImageBuffer,
    scale_factor: f64,
    min_side: usize,
) -> Result<Vec<PyramidLevel>> {
    if !(scale_factor > 1.0) {
        return Err(Error::invalid(format!(
            "pyramid scale factor must be > 1, got {scale_factor}"
        )));
    }
    if min_side == 0 {
        return Err(Error::invalid("pyramid min_side must be >= 1"));
    }
    pyramid_scales(img.width(), img.height(), scale_factor, min_side)
        .into_iter()
        .map(|scale| {
            let w = ((img.width() as f64 * scale).round() as usize).max(1);
            let h = ((img.height() as f64 * scale).round() as usize).max(1);
            Ok(PyramidLevel {
                scale,
                image: resize_bilinear(img, w, h)?,
            })
        })
        .collect()
}
