use super::{CascadeModel, FeatureTable, HaarFeature, MbLbpFeature, Split};
use crate::imaging::IntegralImage;

/// Neighbor blocks of the 3x3 grid, clockwise from top-left. Neighbor `k`
/// sets bit `7 - k` of the code.
const LBP_NEIGHBORS: [(usize, usize); 8] = [
    (0, 0),
    (1, 0),
    (2, 0),
    (2, 1),
    (2, 2),
    (1, 2),
    (0, 2),
    (0, 1),
];

fn round_scaled(v: u32, scale: f64) -> u32 {
    (v as f64 * scale).round() as u32
}

/// Scaled window side, at least 1.
pub(crate) fn scaled_window(model: &CascadeModel, scale: f64) -> (u32, u32) {
    (
        round_scaled(model.window_w, scale).max(1),
        round_scaled(model.window_h, scale).max(1),
    )
}

/// Rectangles of a Haar feature at `scale`, rounded and clipped to the
/// scaled window, with the first weight recomputed so the weighted areas
/// still sum to zero.
pub(crate) fn scale_haar(f: &HaarFeature, scale: f64, win: (u32, u32)) -> Vec<(u32, u32, u32, u32, f64)> {
    let mut rects: Vec<(u32, u32, u32, u32, f64)> = f
        .rects
        .iter()
        .map(|r| {
            let x = round_scaled(r.x, scale).min(win.0);
            let y = round_scaled(r.y, scale).min(win.1);
            let w = round_scaled(r.w, scale).min(win.0 - x);
            let h = round_scaled(r.h, scale).min(win.1 - y);
            (x, y, w, h, r.weight)
        })
        .collect();
    let rest: f64 = rects[1..]
        .iter()
        .map(|&(_, _, w, h, weight)| weight * (w * h) as f64)
        .sum();
    let area0 = (rects[0].2 * rects[0].3) as f64;
    rects[0].4 = if area0 > 0.0 { -rest / area0 } else { 0.0 };
    rects
}

/// `1 / sqrt(max(variance, 1))` of the pixels in the window.
pub fn window_inv_norm(ii: &IntegralImage, wx: usize, wy: usize, w: usize, h: usize) -> f64 {
    let area = (w * h) as f64;
    let sum = ii.rect_sum_unchecked(wx, wy, w, h) as f64;
    let sq = ii.rect_sq_sum_unchecked(wx, wy, w, h) as f64;
    let mean = sum / area;
    let var = sq / area - mean * mean;
    1.0 / var.max(1.0).sqrt()
}

/// Normalized Haar feature response of the window at `(wx, wy)` whose model
/// window `window` is scaled by `scale`.
pub fn eval_haar_feature(
    ii: &IntegralImage,
    f: &HaarFeature,
    window: (u32, u32),
    wx: usize,
    wy: usize,
    scale: f64,
    inv_norm: f64,
) -> f64 {
    let win = (
        round_scaled(window.0, scale).max(1),
        round_scaled(window.1, scale).max(1),
    );
    let inv_area = 1.0 / (win.0 as f64 * win.1 as f64);
    let total: f64 = scale_haar(f, scale, win)
        .iter()
        .map(|&(x, y, w, h, weight)| {
            weight
                * ii.rect_sum_unchecked(wx + x as usize, wy + y as usize, w as usize, h as usize)
                    as f64
        })
        .sum();
    total * inv_area * inv_norm
}

fn scale_lbp(f: &MbLbpFeature, scale: f64) -> (usize, usize, usize, usize) {
    (
        round_scaled(f.x, scale) as usize,
        round_scaled(f.y, scale) as usize,
        round_scaled(f.w, scale).max(1) as usize,
        round_scaled(f.h, scale).max(1) as usize,
    )
}

/// 8-bit MB-LBP code of the feature's 3x3 block grid: a neighbor's bit is
/// set when its block sum is at least the center block sum.
pub fn eval_mb_lbp(ii: &IntegralImage, f: &MbLbpFeature, wx: usize, wy: usize, scale: f64) -> u8 {
    let (x, y, w, h) = scale_lbp(f, scale);
    let block = |i: usize, j: usize| ii.rect_sum_unchecked(wx + x + i * w, wy + y + j * h, w, h);
    let center = block(1, 1);
    LBP_NEIGHBORS
        .iter()
        .enumerate()
        .fold(0u8, |code, (k, &(i, j))| {
            if block(i, j) >= center {
                code | (1 << (7 - k))
            } else {
                code
            }
        })
}

/// Result of running every stage (or until the first rejection) on a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowOutcome {
    pub accepted: bool,
    pub stages_evaluated: usize,
}

/// Integral-image cell types. `u32` cells wrap, but rectangle sums below
/// 2^32 still come out exact.
pub(crate) trait SumCell: Copy {
    /// # Safety
    /// `base + r.d` must be in bounds of `g` (the other corners are smaller).
    unsafe fn rect(g: &[Self], base: usize, r: &CornerRect) -> u64;
}

impl SumCell for u64 {
    #[inline(always)]
    unsafe fn rect(g: &[Self], base: usize, r: &CornerRect) -> u64 {
        g.get_unchecked(base + r.d)
            .wrapping_sub(*g.get_unchecked(base + r.b))
            .wrapping_sub(*g.get_unchecked(base + r.c))
            .wrapping_add(*g.get_unchecked(base + r.a))
    }
}

impl SumCell for u32 {
    #[inline(always)]
    unsafe fn rect(g: &[Self], base: usize, r: &CornerRect) -> u64 {
        g.get_unchecked(base + r.d)
            .wrapping_sub(*g.get_unchecked(base + r.b))
            .wrapping_sub(*g.get_unchecked(base + r.c))
            .wrapping_add(*g.get_unchecked(base + r.a)) as u64
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CornerRect {
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    weight: f64,
}

impl CornerRect {
    fn new(x: usize, y: usize, w: usize, h: usize, stride: usize, weight: f64) -> Self {
        let a = y * stride + x;
        Self {
            a,
            b: a + w,
            c: a + h * stride,
            d: a + h * stride + w,
            weight,
        }
    }
}

struct HaarWeak {
    rects: [CornerRect; 3],
    n: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

struct LbpWeak {
    /// Corner offsets of the 4x4 lattice bounding the 3x3 blocks.
    pts: [usize; 16],
    mask: [u32; 8],
    left: f64,
    right: f64,
}

enum ScaledWeaks {
    Haar(Vec<HaarWeak>),
    MbLbp(Vec<LbpWeak>),
}

/// A cascade with every weak classifier pre-scaled and converted to
/// integral-image offsets for one scale and one image stride, laid out
/// stage by stage.
pub struct ScaledCascade {
    win: (u32, u32),
    stride: usize,
    inv_area: f64,
    window_rect: CornerRect,
    /// Largest corner offset of any rectangle, the window included.
    max_offset: usize,
    /// Stage threshold and the end of its run in `weaks`.
    stages: Vec<(f64, usize)>,
    weaks: ScaledWeaks,
}

impl ScaledCascade {
    pub fn new(model: &CascadeModel, scale: f64, ii: &IntegralImage) -> Self {
        let win = scaled_window(model, scale);
        let stride = ii.stride();
        let mut stages = Vec::with_capacity(model.stages.len());
        let mut end = 0;
        for st in &model.stages {
            end += st.weak_classifiers.len();
            stages.push((st.threshold, end));
        }
        let all_weak = model.stages.iter().flat_map(|s| &s.weak_classifiers);
        let weaks = match &model.features {
            FeatureTable::Haar(fs) => {
                let scaled: Vec<[CornerRect; 3]> = fs
                    .iter()
                    .map(|f| {
                        let mut out = [CornerRect::new(0, 0, 0, 0, stride, 0.0); 3];
                        for (o, &(x, y, w, h, weight)) in out.iter_mut().zip(&scale_haar(f, scale, win)) {
                            *o = CornerRect::new(
                                x as usize, y as usize, w as usize, h as usize, stride, weight,
                            );
                        }
                        out
                    })
                    .collect();
                ScaledWeaks::Haar(
                    all_weak
                        .map(|w| {
                            let Split::Threshold(threshold) = w.split else {
                                unreachable!("validated at parse time")
                            };
                            HaarWeak {
                                rects: scaled[w.feature],
                                n: fs[w.feature].rects.len(),
                                threshold,
                                left: w.left,
                                right: w.right,
                            }
                        })
                        .collect(),
                )
            }
            FeatureTable::MbLbp(fs) => {
                let scaled: Vec<[usize; 16]> = fs
                    .iter()
                    .map(|f| {
                        let (x, y, w, h) = scale_lbp(f, scale);
                        let mut pts = [0usize; 16];
                        for j in 0..4 {
                            for i in 0..4 {
                                pts[j * 4 + i] = (y + j * h) * stride + x + i * w;
                            }
                        }
                        pts
                    })
                    .collect();
                ScaledWeaks::MbLbp(
                    all_weak
                        .map(|w| {
                            let Split::Subset(mask) = w.split else {
                                unreachable!("validated at parse time")
                            };
                            LbpWeak {
                                pts: scaled[w.feature],
                                mask,
                                left: w.left,
                                right: w.right,
                            }
                        })
                        .collect(),
                )
            }
        };
        let window_rect = CornerRect::new(0, 0, win.0 as usize, win.1 as usize, stride, 1.0);
        let max_offset = match &weaks {
            ScaledWeaks::Haar(ws) => ws
                .iter()
                .flat_map(|w| w.rects[..w.n].iter().map(|r| r.d))
                .max(),
            ScaledWeaks::MbLbp(ws) => ws.iter().map(|w| w.pts[15]).max(),
        }
        .unwrap_or(0)
        .max(window_rect.d);
        Self {
            win,
            stride,
            inv_area: 1.0 / (win.0 as f64 * win.1 as f64),
            window_rect,
            max_offset,
            stages,
            weaks,
        }
    }

    /// Scaled window size in pixels.
    pub fn window(&self) -> (u32, u32) {
        self.win
    }

    /// Largest extent (relative to the window origin) any weak classifier's
    /// feature touches, which can exceed the window for MB-LBP grids rounded
    /// up at odd scales.
    pub(crate) fn footprint(&self) -> (usize, usize) {
        let mut fw = self.win.0 as usize;
        let mut fh = self.win.1 as usize;
        if let ScaledWeaks::MbLbp(ws) = &self.weaks {
            for w in ws {
                fw = fw.max(w.pts[15] % self.stride);
                fh = fh.max(w.pts[15] / self.stride);
            }
        }
        (fw, fh)
    }

    /// Runs the stages in order, stopping at the first stage whose sum falls
    /// below its threshold.
    ///
    /// # Panics
    /// If the window's features reach outside the integral image.
    pub fn evaluate(&self, ii: &IntegralImage, wx: usize, wy: usize) -> WindowOutcome {
        let (fw, fh) = self.footprint();
        assert!(
            wx + fw <= ii.width() && wy + fh <= ii.height(),
            "window at ({wx}, {wy}) reaches outside the image"
        );
        self.evaluate_cells(ii.sums(), ii.sq_sums(), wy * self.stride + wx)
    }

    /// `sums` and `sq` are integral grids with this cascade's stride.
    ///
    /// # Panics
    /// If any feature corner of the window at `base` is out of bounds.
    #[inline]
    pub(crate) fn evaluate_cells<T: SumCell>(&self, sums: &[T], sq: &[u64], base: usize) -> WindowOutcome {
        let last = base + self.max_offset;
        assert!(last < sums.len() && last < sq.len(), "window out of bounds");
        // SAFETY: every corner offset is at most `max_offset`, so every
        // lookup below is at most `last`, checked above.
        unsafe { self.evaluate_unchecked(sums, sq, base) }
    }

    #[inline(always)]
    unsafe fn evaluate_unchecked<T: SumCell>(&self, sums: &[T], sq: &[u64], base: usize) -> WindowOutcome {
        let mut start = 0;
        match &self.weaks {
            ScaledWeaks::Haar(ws) => {
                let sum = T::rect(sums, base, &self.window_rect) as f64;
                let sqs = u64::rect(sq, base, &self.window_rect) as f64;
                let mean = sum * self.inv_area;
                let var = sqs * self.inv_area - mean * mean;
                let inv_norm = self.inv_area / var.max(1.0).sqrt();
                for (si, &(threshold, end)) in self.stages.iter().enumerate() {
                    let mut total = 0.0;
                    for w in &ws[start..end] {
                        let mut v = 0.0;
                        for r in &w.rects[..w.n] {
                            v += r.weight * T::rect(sums, base, r) as f64;
                        }
                        total += if v * inv_norm < w.threshold { w.left } else { w.right };
                    }
                    if total < threshold {
                        return WindowOutcome { accepted: false, stages_evaluated: si + 1 };
                    }
                    start = end;
                }
            }
            ScaledWeaks::MbLbp(ws) => {
                for (si, &(threshold, end)) in self.stages.iter().enumerate() {
                    let mut total = 0.0;
                    for w in &ws[start..end] {
                        let code = lbp_code(&w.pts, sums, base);
                        let hit = w.mask[(code >> 5) as usize] & (1 << (code & 31)) != 0;
                        total += if hit { w.left } else { w.right };
                    }
                    if total < threshold {
                        return WindowOutcome { accepted: false, stages_evaluated: si + 1 };
                    }
                    start = end;
                }
            }
        }
        WindowOutcome {
            accepted: true,
            stages_evaluated: self.stages.len(),
        }
    }
}

/// # Safety
/// `base + p[15]` must be in bounds of `g`.
#[inline(always)]
unsafe fn lbp_code<T: SumCell>(p: &[usize; 16], g: &[T], base: usize) -> u8 {
    let s = |a: usize, b: usize, c: usize, d: usize| {
        let r = CornerRect { a: p[a], b: p[b], c: p[c], d: p[d], weight: 0.0 };
        // SAFETY: forwarded from the caller; `p[15]` is the largest offset.
        unsafe { T::rect(g, base, &r) }
    };
    let center = s(5, 6, 9, 10);
    let mut code = 0u8;
    code |= ((s(0, 1, 4, 5) >= center) as u8) << 7;
    code |= ((s(1, 2, 5, 6) >= center) as u8) << 6;
    code |= ((s(2, 3, 6, 7) >= center) as u8) << 5;
    code |= ((s(6, 7, 10, 11) >= center) as u8) << 4;
    code |= ((s(10, 11, 14, 15) >= center) as u8) << 3;
    code |= ((s(9, 10, 13, 14) >= center) as u8) << 2;
    code |= ((s(8, 9, 12, 13) >= center) as u8) << 1;
    code |= (s(4, 5, 8, 9) >= center) as u8;
    code
}

/// Evaluates the cascade on one window; convenience over [`ScaledCascade`].
pub fn run_cascade_window(
    model: &CascadeModel,
    ii: &IntegralImage,
    wx: usize,
    wy: usize,
    scale: f64,
) -> WindowOutcome {
    ScaledCascade::new(model, scale, ii).evaluate(ii, wx, wy)
}
