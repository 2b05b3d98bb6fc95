//! Histogram-of-oriented-gradients descriptor, a primal linear SVM trainer
//! and a sliding-window HOG face detector.

mod detect;
mod svm;
mod train;

pub use detect::{detect_hog, scan_hog, HogDetectParams, HogWindowScore};
pub use svm::{
    hinge_objective, hinge_subgradient, load_svm, parse_svm, svm_to_bytes, train_linear_svm,
    LinearSvmModel, SvmTraining,
};
pub use train::{train_hog_detector, HogTrainOptions, HogTrainReport};

use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, ImageBuffer};

/// Descriptor geometry. All sizes are in pixels except `block`, which
/// counts cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HogConfig {
    pub cell: usize,
    pub block: usize,
    pub block_stride: usize,
    pub bins: usize,
    pub window: usize,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self {
            cell: 8,
            block: 2,
            block_stride: 1,
            bins: 9,
            window: 64,
        }
    }
}

/// Clip level of the L2-hys block normalization.
pub const L2HYS_CLIP: f64 = 0.2;
const NORM_EPS: f64 = 1e-6;

/// Descriptor length of the default configuration.
pub const DEFAULT_DESCRIPTOR_LEN: usize = 1764;
const _: () = assert!(
    DEFAULT_DESCRIPTOR_LEN == ((64 / 8 - 2) / 1 + 1) * ((64 / 8 - 2) / 1 + 1) * 2 * 2 * 9
);

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell == 0 || self.block == 0 || self.block_stride == 0 || self.bins == 0 {
            return Err(Error::invalid("hog config sizes must be positive"));
        }
        if self.window % self.cell != 0 {
            return Err(Error::invalid("hog window must be a multiple of the cell size"));
        }
        if self.block > self.cells_per_side() {
            return Err(Error::invalid("hog block larger than the window"));
        }
        Ok(())
    }

    pub fn cells_per_side(&self) -> usize {
        self.window / self.cell
    }

    pub fn blocks_per_side(&self) -> usize {
        (self.cells_per_side() - self.block) / self.block_stride + 1
    }

    pub fn descriptor_len(&self) -> usize {
        let b = self.blocks_per_side();
        b * b * self.block * self.block * self.bins
    }
}

/// Per-pixel gradient planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Unsigned orientation in degrees, `[0, 180)`.
    pub orientation: Vec<f64>,
}

#[inline]
fn clamped_diff(px: &[u8], stride: usize, x: usize, y: usize, w: usize, h: usize) -> (f64, f64) {
    let xl = x.saturating_sub(1);
    let xr = (x + 1).min(w - 1);
    let yu = y.saturating_sub(1);
    let yd = (y + 1).min(h - 1);
    let gx = px[y * stride + xr] as i32 - px[y * stride + xl] as i32;
    let gy = px[yd * stride + x] as i32 - px[yu * stride + x] as i32;
    (gx as f64, gy as f64)
}

#[inline]
fn orientation_deg(gx: f64, gy: f64) -> f64 {
    let mut a = gy.atan2(gx).to_degrees();
    if a < 0.0 {
        a += 180.0;
    }
    if a >= 180.0 {
        a -= 180.0;
    }
    a
}

/// Orientation-bin split of one pixel: two bins and their weighted votes.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Vote {
    pub b0: u16,
    pub b1: u16,
    pub v0: f64,
    pub v1: f64,
}

#[inline]
pub(crate) fn pixel_vote(gx: f64, gy: f64, bins: usize) -> Vote {
    let mag = (gx * gx + gy * gy).sqrt();
    if mag == 0.0 {
        return Vote::default();
    }
    let width = 180.0 / bins as f64;
    let pos = orientation_deg(gx, gy) / width - 0.5;
    let lo = pos.floor();
    let frac = pos - lo;
    let b0 = (lo as i64).rem_euclid(bins as i64) as u16;
    let b1 = ((lo as i64) + 1).rem_euclid(bins as i64) as u16;
    Vote {
        b0,
        b1,
        v0: mag * (1.0 - frac),
        v1: mag * frac,
    }
}

/// Vote of the pixel at `(x, y)` with gradients clamped to the `w x h`
/// region starting at `(ox, oy)` of a larger plane.
#[inline]
pub(crate) fn region_vote(
    px: &[u8],
    stride: usize,
    (ox, oy): (usize, usize),
    (w, h): (usize, usize),
    (x, y): (usize, usize),
    bins: usize,
) -> Vote {
    let (gx, gy) = clamped_diff(&px[oy * stride + ox..], stride, x, y, w, h);
    pixel_vote(gx, gy, bins)
}

/// Centered `[-1, 0, 1]` differences with clamped borders.
pub fn gradients(img: &ImageBuffer) -> Result<Gradients> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!(
            "gradients need at least 3x3 pixels, got {w}x{h}"
        )));
    }
    let gray = to_grayscale(img);
    let px = gray.data();
    let n = w * h;
    let mut g = Gradients {
        width: w,
        height: h,
        gx: Vec::with_capacity(n),
        gy: Vec::with_capacity(n),
        magnitude: Vec::with_capacity(n),
        orientation: Vec::with_capacity(n),
    };
    for y in 0..h {
        for x in 0..w {
            let (gx, gy) = clamped_diff(px, w, x, y, w, h);
            g.gx.push(gx);
            g.gy.push(gy);
            g.magnitude.push((gx * gx + gy * gy).sqrt());
            g.orientation.push(orientation_deg(gx, gy));
        }
    }
    Ok(g)
}

/// L2-hys normalization of one block vector in place.
pub(crate) fn l2hys(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x = (*x / (norm + NORM_EPS)).min(L2HYS_CLIP);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm + NORM_EPS;
    }
}

/// Concatenates normalized blocks from a cell histogram grid laid out
/// row-major as `cells_per_side x cells_per_side x bins`.
pub(crate) fn blocks_from_cells(cells: &[f64], cfg: &HogConfig, out: &mut Vec<f64>) {
    let cps = cfg.cells_per_side();
    let bps = cfg.blocks_per_side();
    let block_len = cfg.block * cfg.block * cfg.bins;
    out.clear();
    for by in 0..bps {
        for bx in 0..bps {
            let start = out.len();
            for cy in 0..cfg.block {
                for cx in 0..cfg.block {
                    let cell = (by * cfg.block_stride + cy) * cps + bx * cfg.block_stride + cx;
                    out.extend_from_slice(&cells[cell * cfg.bins..(cell + 1) * cfg.bins]);
                }
            }
            l2hys(&mut out[start..start + block_len]);
        }
    }
}

/// Descriptor of one window of exactly `cfg.window` pixels square.
pub fn hog_descriptor(window: &ImageBuffer, cfg: &HogConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if window.width() != cfg.window || window.height() != cfg.window {
        return Err(Error::invalid(format!(
            "hog window must be {0}x{0}, got {1}x{2}",
            cfg.window,
            window.width(),
            window.height()
        )));
    }
    let gray = to_grayscale(window);
    let n = cfg.window;
    let cps = cfg.cells_per_side();
    let mut cells = vec![0.0; cps * cps * cfg.bins];
    for y in 0..n {
        for x in 0..n {
            let v = region_vote(gray.data(), n, (0, 0), (n, n), (x, y), cfg.bins);
            let cell = (y / cfg.cell) * cps + x / cfg.cell;
            cells[cell * cfg.bins + v.b0 as usize] += v.v0;
            cells[cell * cfg.bins + v.b1 as usize] += v.v1;
        }
    }
    let mut out = Vec::with_capacity(cfg.descriptor_len());
    blocks_from_cells(&cells, cfg, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gray(w: usize, h: usize, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h).map(|_| rng.gen()).collect();
        ImageBuffer::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn default_length_is_1764() {
        assert_eq!(HogConfig::default().descriptor_len(), 1764);
    }

    #[test]
    fn constant_image_has_no_gradient() {
        let g = gradients(&ImageBuffer::filled(5, 4, 1, 77).unwrap()).unwrap();
        assert!(g.magnitude.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn horizontal_ramp() {
        let img = ImageBuffer::from_gray_fn(6, 5, |x, _| x as u8).unwrap();
        let g = gradients(&img).unwrap();
        for y in 0..5 {
            for x in 1..5 {
                let i = y * 6 + x;
                assert_eq!((g.gx[i], g.gy[i], g.orientation[i]), (2.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn transpose_swaps_components() {
        let img = random_gray(7, 5, 3);
        let t = ImageBuffer::from_gray_fn(5, 7, |x, y| img.get(y, x, 0)).unwrap();
        let (a, b) = (gradients(&img).unwrap(), gradients(&t).unwrap());
        for y in 0..5 {
            for x in 0..7 {
                assert_eq!(a.gx[y * 7 + x], b.gy[x * 5 + y]);
                assert_eq!(a.gy[y * 7 + x], b.gx[x * 5 + y]);
            }
        }
    }

    #[test]
    fn tiny_image_rejected() {
        assert!(gradients(&ImageBuffer::filled(2, 9, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn constant_window_gives_zero_descriptor() {
        let d = hog_descriptor(&ImageBuffer::filled(64, 64, 1, 200).unwrap(), &HogConfig::default())
            .unwrap();
        assert_eq!(d.len(), 1764);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_window_size_rejected() {
        let img = ImageBuffer::filled(64, 63, 1, 0).unwrap();
        assert!(matches!(
            hog_descriptor(&img, &HogConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn block_norms_bounded() {
        let cfg = HogConfig::default();
        for seed in 0..5 {
            let d = hog_descriptor(&random_gray(64, 64, seed), &cfg).unwrap();
            for block in d.chunks(36) {
                let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= 1.0 + 1e-6, "{norm}");
                assert!(block.iter().all(|&v| v >= 0.0 && v <= 1.0));
            }
        }
    }

    #[test]
    fn brightness_offset_invariance() {
        let cfg = HogConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base: Vec<u8> = (0..64 * 64).map(|_| rng.gen_range(0..200)).collect();
        let shifted: Vec<u8> = base.iter().map(|v| v + 40).collect();
        let a = hog_descriptor(&ImageBuffer::new(64, 64, 1, base).unwrap(), &cfg).unwrap();
        let b = hog_descriptor(&ImageBuffer::new(64, 64, 1, shifted).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vote_splits_between_neighbouring_bins() {
        // 0 degrees sits halfway between the centers at 170 and 10
        let v = pixel_vote(2.0, 0.0, 9);
        assert_eq!((v.b0, v.b1), (8, 0));
        assert!((v.v0 - 1.0).abs() < 1e-12 && (v.v1 - 1.0).abs() < 1e-12);
        // 90 degrees is the center of bin 4
        let v = pixel_vote(0.0, 3.0, 9);
        assert_eq!(v.b0, 4);
        assert!((v.v0 - 3.0).abs() < 1e-12 && v.v1.abs() < 1e-12);
    }
}
