use super::eval::scaled_window;
use super::{CascadeModel, ScaledCascade};
use crate::detection::{group_rectangles, BoundingBox, Detection};
use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, ImageBuffer, IntegralImage};

/// Sliding-window scan settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanParams {
    /// Window growth per scale step, > 1.
    pub scale_factor: f64,
    /// Smallest window side scanned, in pixels.
    pub min_size: u32,
    /// Largest window side scanned; `None` scans up to the image size.
    pub max_size: Option<u32>,
    /// Step between windows at model scale; multiplied by the scale.
    pub window_step: f64,
    pub min_neighbors: usize,
    /// Grouping tolerance passed to [`group_rectangles`].
    pub group_eps: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.1,
            min_size: 24,
            max_size: None,
            window_step: 1.0,
            min_neighbors: 3,
            group_eps: 0.2,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale_factor > 1.0) {
            return Err(Error::invalid(format!(
                "scale_factor must be > 1, got {}",
                self.scale_factor
            )));
        }
        if !(self.window_step > 0.0) {
            return Err(Error::invalid("window_step must be > 0"));
        }
        if !(self.group_eps > 0.0) {
            return Err(Error::invalid("group_eps must be > 0"));
        }
        Ok(())
    }
}

/// Everything a scan produced before grouping, plus work counters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CascadeScan {
    /// Accepted windows ordered by scale, then y, then x.
    pub windows: Vec<BoundingBox>,
    pub windows_scanned: u64,
    pub stage_evaluations: u64,
    pub scales: Vec<f64>,
}

/// Model scales visited by the scan, smallest window first.
pub(crate) fn scan_scales(model: &CascadeModel, width: usize, height: usize, p: &ScanParams) -> Vec<f64> {
    let base = (p.min_size as f64 / model.window_w as f64)
        .max(p.min_size as f64 / model.window_h as f64)
        .max(1e-6);
    let mut scales = Vec::new();
    let mut k = 0;
    loop {
        let scale = base * p.scale_factor.powi(k);
        let (ww, wh) = scaled_window(model, scale);
        if ww as usize > width || wh as usize > height {
            break;
        }
        if let Some(max) = p.max_size {
            if ww > max || wh > max {
                break;
            }
        }
        scales.push(scale);
        k += 1;
    }
    scales
}

/// Runs the cascade over every window position at every scale of a
/// grayscale image, without grouping.
pub fn scan_cascade(model: &CascadeModel, gray: &ImageBuffer, p: &ScanParams) -> Result<CascadeScan> {
    p.validate()?;
    if !gray.is_gray() {
        return Err(Error::invalid("scan_cascade expects a grayscale image"));
    }
    let (width, height) = (gray.width(), gray.height());
    let mut out = CascadeScan::default();
    if width < model.window_w as usize || height < model.window_h as usize {
        return Ok(out);
    }
    let ii = IntegralImage::new(gray)?;
    // 32-bit cells halve memory traffic whenever every rectangle sum fits
    let narrow: Option<Vec<u32>> = ((width * height) as u64 * 255 <= u32::MAX as u64)
        .then(|| ii.sums().iter().map(|&v| v as u32).collect());
    for scale in scan_scales(model, width, height, p) {
        let scaled = ScaledCascade::new(model, scale, &ii);
        let (ww, wh) = scaled.window();
        let (fw, fh) = scaled.footprint();
        if fw > width || fh > height {
            continue;
        }
        out.scales.push(scale);
        let step = ((p.window_step * scale).round() as usize).max(1);
        let mut y = 0;
        while y + fh <= height {
            let mut x = 0;
            while x + fw <= width {
                let base = y * ii.stride() + x;
                let r = match &narrow {
                    Some(cells) => scaled.evaluate_cells(cells, ii.sq_sums(), base),
                    None => scaled.evaluate_cells(ii.sums(), ii.sq_sums(), base),
                };
                out.windows_scanned += 1;
                out.stage_evaluations += r.stages_evaluated as u64;
                if r.accepted {
                    out.windows
                        .push(BoundingBox::new(x as f64, y as f64, ww as f64, wh as f64));
                }
                x += step;
            }
            y += step;
        }
    }
    Ok(out)
}

/// Multi-scale cascade detection: grayscale conversion, scan, then
/// rectangle grouping. Images smaller than the model window yield nothing.
pub fn detect_cascade(model: &CascadeModel, img: &ImageBuffer, p: &ScanParams) -> Result<Vec<Detection>> {
    Ok(detect_cascade_with_scan(model, img, p)?.0)
}

pub(crate) fn detect_cascade_with_scan(
    model: &CascadeModel,
    img: &ImageBuffer,
    p: &ScanParams,
) -> Result<(Vec<Detection>, CascadeScan)> {
    let gray = to_grayscale(img);
    let scan = scan_cascade(model, &gray, p)?;
    let dets = group_rectangles(&scan.windows, p.min_neighbors, p.group_eps);
    Ok((dets, scan))
}
