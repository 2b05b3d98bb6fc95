use super::svm::dot;
use super::{blocks_from_cells, region_vote, HogConfig, LinearSvmModel, Vote};
use crate::detection::{nms_hard, BoundingBox, Detection};
use crate::error::{Error, Result};
use crate::imaging::{build_pyramid, to_grayscale, ImageBuffer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HogDetectParams {
    pub pyramid_factor: f64,
    /// Window step in level pixels.
    pub stride: usize,
    pub nms_iou: f64,
}

impl Default for HogDetectParams {
    fn default() -> Self {
        Self {
            pyramid_factor: 1.2,
            stride: 8,
            nms_iou: 0.3,
        }
    }
}

/// Raw SVM score of one window, in pyramid-level coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HogWindowScore {
    pub level: usize,
    pub x: usize,
    pub y: usize,
    pub score: f64,
    /// Level-to-original factors along x and y.
    pub to_original: (f64, f64),
}

impl HogWindowScore {
    pub fn original_box(&self, window: usize) -> BoundingBox {
        let (sx, sy) = self.to_original;
        BoundingBox::new(
            self.x as f64 * sx,
            self.y as f64 * sy,
            window as f64 * sx,
            window as f64 * sy,
        )
    }
}

/// Scores every window of every pyramid level, ordered by level, then y,
/// then x. Each score equals the model applied to [`super::hog_descriptor`]
/// of the cropped window.
pub fn scan_hog(
    model: &LinearSvmModel,
    cfg: &HogConfig,
    img: &ImageBuffer,
    p: &HogDetectParams,
) -> Result<Vec<HogWindowScore>> {
    cfg.validate()?;
    if model.weights.len() != cfg.descriptor_len() {
        return Err(Error::invalid(format!(
            "svm has {} weights, descriptor has {}",
            model.weights.len(),
            cfg.descriptor_len()
        )));
    }
    if p.stride == 0 {
        return Err(Error::invalid("hog stride must be >= 1"));
    }
    let gray = to_grayscale(img);
    let n = cfg.window;
    if gray.width() < n || gray.height() < n {
        return Ok(Vec::new());
    }
    let levels = build_pyramid(&gray, p.pyramid_factor, n)?;
    let cps = cfg.cells_per_side();
    let mut cells = vec![0.0; cps * cps * cfg.bins];
    let mut desc = Vec::with_capacity(cfg.descriptor_len());
    let mut out = Vec::new();
    for (li, level) in levels.iter().enumerate() {
        let (w, h) = (level.image.width(), level.image.height());
        if w < n || h < n {
            continue;
        }
        let px = level.image.data();
        let votes: Vec<Vote> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| region_vote(px, w, (0, 0), (w, h), (x, y), cfg.bins))
            .collect();
        let to_original = (
            gray.width() as f64 / w as f64,
            gray.height() as f64 / h as f64,
        );
        let mut y0 = 0;
        while y0 + n <= h {
            let mut x0 = 0;
            while x0 + n <= w {
                cells.iter_mut().for_each(|c| *c = 0.0);
                for y in 0..n {
                    let ring_row = y == 0 || y == n - 1;
                    let row = &votes[(y0 + y) * w + x0..(y0 + y) * w + x0 + n];
                    for x in 0..n {
                        // borders of the crop see clamped neighbours
                        let v = if ring_row || x == 0 || x == n - 1 {
                            region_vote(px, w, (x0, y0), (n, n), (x, y), cfg.bins)
                        } else {
                            row[x]
                        };
                        let cell = (y / cfg.cell) * cps + x / cfg.cell;
                        cells[cell * cfg.bins + v.b0 as usize] += v.v0;
                        cells[cell * cfg.bins + v.b1 as usize] += v.v1;
                    }
                }
                blocks_from_cells(&cells, cfg, &mut desc);
                out.push(HogWindowScore {
                    level: li,
                    x: x0,
                    y: y0,
                    score: dot(&model.weights, &desc) + model.bias,
                    to_original,
                });
                x0 += p.stride;
            }
            y0 += p.stride;
        }
    }
    Ok(out)
}

fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// Multi-scale HOG detection: windows scoring above the model threshold,
/// mapped to original pixels, suppressed with hard NMS. Scores are passed
/// through a logistic so they lie in `(0, 1)`.
pub fn detect_hog(
    model: &LinearSvmModel,
    cfg: &HogConfig,
    img: &ImageBuffer,
    p: &HogDetectParams,
) -> Result<Vec<Detection>> {
    let dets: Vec<Detection> = scan_hog(model, cfg, img, p)?
        .into_iter()
        .filter(|s| s.score > model.threshold)
        .map(|s| Detection::new(s.original_box(cfg.window), logistic(s.score)))
        .collect();
    Ok(nms_hard(&dets, p.nms_iou))
}
