//! Brute-force reference implementations and the equivalence checks built on
//! them. Each `check_*` returns the first mismatch as an error string so the
//! acceptance run can report it on one line.

#![allow(dead_code)]

use facebench_core::bench::summarize;
use facebench_core::cascade::{
    scan_cascade, CascadeModel, FeatureTable, HaarFeature, MbLbpFeature, ScanParams, Split, Stage,
    WeakClassifier, WeightedRect,
};
use facebench_core::hog::{hog_descriptor, scan_hog, HogConfig, HogDetectParams, LinearSvmModel};
use facebench_core::imaging::{build_pyramid, to_grayscale, ImageBuffer, IntegralImage};
use facebench_core::nn::ops::{conv2d, depthwise_conv2d, max_pool};
use facebench_core::nn::{Tensor, WeightTensor};
use facebench_core::BoundingBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gray(r: &mut impl Rng, w: usize, h: usize) -> ImageBuffer {
    ImageBuffer::from_gray_fn(w, h, |_, _| r.gen()).unwrap()
}

// ---------------------------------------------------------------- integral

fn pixel_sum(img: &ImageBuffer, x: usize, y: usize, w: usize, h: usize) -> (u64, u64) {
    let mut s = 0u64;
    let mut sq = 0u64;
    for yy in y..y + h {
        for xx in x..x + w {
            let p = img.get(xx, yy, 0) as u64;
            s += p;
            sq += p * p;
        }
    }
    (s, sq)
}

/// Every rectangle of every image, summed pixel by pixel.
pub fn check_integral() -> Check {
    let mut r = rng(11);
    let mut images = vec![
        ImageBuffer::filled(1, 1, 1, 255).unwrap(),
        ImageBuffer::filled(32, 32, 1, 255).unwrap(),
    ];
    for (w, h) in [(3, 7), (17, 5), (1, 32), (32, 1), (13, 29), (32, 32)] {
        images.push(random_gray(&mut r, w, h));
    }
    for img in &images {
        let ii = IntegralImage::new(img).map_err(|e| e.to_string())?;
        let (iw, ih) = (img.width(), img.height());
        for y in 0..=ih {
            for x in 0..=iw {
                for h in 0..=ih - y {
                    for w in 0..=iw - x {
                        let want = pixel_sum(img, x, y, w, h);
                        let got = (
                            ii.rect_sum(x, y, w, h).map_err(|e| e.to_string())?,
                            ii.rect_sq_sum(x, y, w, h).map_err(|e| e.to_string())?,
                        );
                        if got != want {
                            return Err(format!(
                                "{iw}x{ih} rect ({x},{y},{w},{h}): got {got:?}, want {want:?}"
                            ));
                        }
                    }
                }
            }
        }
        if ii.rect_sum(0, 0, iw + 1, 1).is_ok() {
            return Err(format!("{iw}x{ih}: out-of-bounds rectangle accepted"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- nn ops

fn random_tensor(r: &mut impl Rng, c: usize, h: usize, w: usize) -> Tensor {
    Tensor::from_fn(c, h, w, |_, _, _| r.gen_range(-1.0..1.0))
}

fn random_vec(r: &mut impl Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn padded(x: &Tensor, c: usize, y: isize, xx: isize) -> f32 {
    if y < 0 || xx < 0 || y >= x.height() as isize || xx >= x.width() as isize {
        0.0
    } else {
        x.at(c, y as usize, xx as usize)
    }
}

fn naive_conv(x: &Tensor, k: &[f32], dims: [usize; 4], bias: &[f32], stride: usize, pad: usize) -> Tensor {
    let [oc, ic, kh, kw] = dims;
    let oh = (x.height() + 2 * pad - kh) / stride + 1;
    let ow = (x.width() + 2 * pad - kw) / stride + 1;
    Tensor::from_fn(oc, oh, ow, |o, oy, ox| {
        let mut acc = bias[o];
        for i in 0..ic {
            for ky in 0..kh {
                for kx in 0..kw {
                    let yy = (oy * stride + ky) as isize - pad as isize;
                    let xx = (ox * stride + kx) as isize - pad as isize;
                    acc += k[((o * ic + i) * kh + ky) * kw + kx] * padded(x, i, yy, xx);
                }
            }
        }
        acc
    })
}

fn naive_depthwise(x: &Tensor, k: &[f32], kh: usize, kw: usize, bias: &[f32], stride: usize, pad: usize) -> Tensor {
    let oh = (x.height() + 2 * pad - kh) / stride + 1;
    let ow = (x.width() + 2 * pad - kw) / stride + 1;
    Tensor::from_fn(x.channels(), oh, ow, |c, oy, ox| {
        let mut acc = bias[c];
        for ky in 0..kh {
            for kx in 0..kw {
                let yy = (oy * stride + ky) as isize - pad as isize;
                let xx = (ox * stride + kx) as isize - pad as isize;
                acc += k[(c * kh + ky) * kw + kx] * padded(x, c, yy, xx);
            }
        }
        acc
    })
}

fn naive_pool(x: &Tensor, k: usize, s: usize, ceil_mode: bool) -> Tensor {
    let count = |n: usize| {
        let span = (n - k) as f64 / s as f64;
        let mut out = if ceil_mode { span.ceil() } else { span.floor() } as usize + 1;
        if ceil_mode && (out - 1) * s >= n {
            out -= 1;
        }
        out
    };
    let (oh, ow) = (count(x.height()), count(x.width()));
    Tensor::from_fn(x.channels(), oh, ow, |c, oy, ox| {
        let mut m = f32::NEG_INFINITY;
        for y in oy * s..(oy * s + k).min(x.height()) {
            for xx in ox * s..(ox * s + k).min(x.width()) {
                m = m.max(x.at(c, y, xx));
            }
        }
        m
    })
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> Result<f32, String> {
    if a.shape() != b.shape() {
        return Err(format!("shape {:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max))
}

/// conv2d, depthwise_conv2d and max_pool against direct loops over `configs`
/// random shapes each, within `tol` absolute.
pub fn check_nn_ops(configs: usize, tol: f32) -> Check {
    let mut r = rng(23);
    for i in 0..configs {
        let c = r.gen_range(1..=4);
        let h = r.gen_range(1..=12);
        let w = r.gen_range(1..=12);
        let pad = r.gen_range(0..=2);
        let kh = r.gen_range(1..=5.min(h + 2 * pad));
        let kw = r.gen_range(1..=5.min(w + 2 * pad));
        let stride = r.gen_range(1..=3);
        let x = random_tensor(&mut r, c, h, w);
        let oc = r.gen_range(1..=4);
        let k = random_vec(&mut r, oc * c * kh * kw);
        let bias = random_vec(&mut r, oc);
        let wt = WeightTensor::new(vec![oc, c, kh, kw], k.clone()).unwrap();
        let got = conv2d(&x, &wt, &bias, stride, pad).map_err(|e| e.to_string())?;
        let d = max_abs_diff(&got, &naive_conv(&x, &k, [oc, c, kh, kw], &bias, stride, pad))?;
        if d > tol {
            return Err(format!("conv2d config {i}: max diff {d}"));
        }

        let k = random_vec(&mut r, c * kh * kw);
        let bias = random_vec(&mut r, c);
        let wt = WeightTensor::new(vec![c, kh, kw], k.clone()).unwrap();
        let got = depthwise_conv2d(&x, &wt, &bias, stride, pad).map_err(|e| e.to_string())?;
        let d = max_abs_diff(&got, &naive_depthwise(&x, &k, kh, kw, &bias, stride, pad))?;
        if d > tol {
            return Err(format!("depthwise config {i}: max diff {d}"));
        }

        let pk = r.gen_range(1..=3.min(h.min(w)));
        let ps = r.gen_range(1..=3);
        for ceil_mode in [false, true] {
            let got = max_pool(&x, pk, ps, ceil_mode).map_err(|e| e.to_string())?;
            let d = max_abs_diff(&got, &naive_pool(&x, pk, ps, ceil_mode))?;
            if d > tol {
                return Err(format!("max_pool config {i} ceil={ceil_mode}: max diff {d}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- cascades

fn round_scaled(v: u32, s: f64) -> usize {
    (v as f64 * s).round() as usize
}

/// Stage-by-stage evaluation of one window with pixel loops.
fn naive_window(model: &CascadeModel, img: &ImageBuffer, wx: usize, wy: usize, s: f64) -> bool {
    let ww = round_scaled(model.window_w, s).max(1);
    let wh = round_scaled(model.window_h, s).max(1);
    let sum = |x: usize, y: usize, w: usize, h: usize| pixel_sum(img, wx + x, wy + y, w, h);
    let stump_left = |weak: &WeakClassifier| -> bool {
        match (&model.features, &weak.split) {
            (FeatureTable::Haar(fs), Split::Threshold(t)) => {
                let f = &fs[weak.feature];
                let mut rects: Vec<(usize, usize, usize, usize, f64)> = f
                    .rects
                    .iter()
                    .map(|r| {
                        let x = round_scaled(r.x, s).min(ww);
                        let y = round_scaled(r.y, s).min(wh);
                        let w = round_scaled(r.w, s).min(ww - x);
                        let h = round_scaled(r.h, s).min(wh - y);
                        (x, y, w, h, r.weight)
                    })
                    .collect();
                // rebalance so a constant window gives zero
                let others: f64 = rects[1..].iter().map(|r| r.4 * (r.2 * r.3) as f64).sum();
                let a0 = (rects[0].2 * rects[0].3) as f64;
                rects[0].4 = if a0 > 0.0 { -others / a0 } else { 0.0 };
                let inv_area = 1.0 / (ww as f64 * wh as f64);
                let (s1, s2) = sum(0, 0, ww, wh);
                let mean = s1 as f64 * inv_area;
                let var = s2 as f64 * inv_area - mean * mean;
                let inv_norm = inv_area / var.max(1.0).sqrt();
                let mut v = 0.0;
                for &(x, y, w, h, weight) in &rects {
                    v += weight * sum(x, y, w, h).0 as f64;
                }
                v * inv_norm < *t
            }
            (FeatureTable::MbLbp(fs), Split::Subset(mask)) => {
                let f = &fs[weak.feature];
                let (x, y) = (round_scaled(f.x, s), round_scaled(f.y, s));
                let (w, h) = (round_scaled(f.w, s).max(1), round_scaled(f.h, s).max(1));
                let block = |i: usize, j: usize| sum(x + i * w, y + j * h, w, h).0;
                let center = block(1, 1);
                let ring = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
                let mut code = 0usize;
                for (k, &(i, j)) in ring.iter().enumerate() {
                    if block(i, j) >= center {
                        code |= 1 << (7 - k);
                    }
                }
                (mask[code / 32] >> (code % 32)) & 1 == 1
            }
            _ => panic!("split kind does not match feature kind"),
        }
    };
    model.stages.iter().all(|stage| {
        let total: f64 = stage
            .weak_classifiers
            .iter()
            .map(|w| if stump_left(w) { w.left } else { w.right })
            .sum();
        total >= stage.threshold
    })
}

/// Every accepted window over every scale and position, in scale, y, x order.
pub fn enumerate_windows(model: &CascadeModel, img: &ImageBuffer, p: &ScanParams) -> Vec<BoundingBox> {
    let (iw, ih) = (img.width(), img.height());
    let base = (p.min_size as f64 / model.window_w as f64).max(p.min_size as f64 / model.window_h as f64);
    let mut out = Vec::new();
    for k in 0.. {
        let s = base * p.scale_factor.powi(k);
        let ww = round_scaled(model.window_w, s).max(1);
        let wh = round_scaled(model.window_h, s).max(1);
        if ww > iw || wh > ih || p.max_size.is_some_and(|m| ww > m as usize || wh > m as usize) {
            break;
        }
        // MB-LBP grids may reach past the window after rounding; features no
        // stump refers to are never read
        let (mut fw, mut fh) = (ww, wh);
        if let FeatureTable::MbLbp(fs) = &model.features {
            let used = model.stages.iter().flat_map(|st| &st.weak_classifiers).map(|w| &fs[w.feature]);
            for f in used {
                fw = fw.max(round_scaled(f.x, s) + 3 * round_scaled(f.w, s).max(1));
                fh = fh.max(round_scaled(f.y, s) + 3 * round_scaled(f.h, s).max(1));
            }
        }
        if fw > iw || fh > ih {
            continue;
        }
        let step = ((p.window_step * s).round() as usize).max(1);
        for y in (0..=ih - fh).step_by(step) {
            for x in (0..=iw - fw).step_by(step) {
                if naive_window(model, img, x, y, s) {
                    out.push(BoundingBox::new(x as f64, y as f64, ww as f64, wh as f64));
                }
            }
        }
    }
    out
}

fn random_haar_cascade(r: &mut impl Rng, ww: u32, wh: u32) -> CascadeModel {
    let features: Vec<HaarFeature> = (0..12)
        .map(|_| {
            let n = r.gen_range(2..=3);
            HaarFeature {
                rects: (0..n)
                    .map(|i| {
                        let w = r.gen_range(1..=ww);
                        let h = r.gen_range(1..=wh);
                        WeightedRect {
                            x: r.gen_range(0..=ww - w),
                            y: r.gen_range(0..=wh - h),
                            w,
                            h,
                            weight: if i == 0 { -1.0 } else { r.gen_range(1.0..3.0) },
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    let stages = (0..3)
        .map(|_| {
            let n = r.gen_range(2..=4);
            Stage {
                threshold: r.gen_range(-0.6..0.2) * n as f64,
                weak_classifiers: (0..n)
                    .map(|_| WeakClassifier {
                        feature: r.gen_range(0..features.len()),
                        split: Split::Threshold(r.gen_range(-0.2..0.2)),
                        left: r.gen_range(-1.0..1.0),
                        right: r.gen_range(-1.0..1.0),
                    })
                    .collect(),
            }
        })
        .collect();
    CascadeModel {
        window_w: ww,
        window_h: wh,
        stages,
        features: FeatureTable::Haar(features),
    }
}

fn random_lbp_cascade(r: &mut impl Rng, side: u32) -> CascadeModel {
    let features: Vec<MbLbpFeature> = (0..10)
        .map(|_| {
            let w = r.gen_range(1..=side / 3);
            let h = r.gen_range(1..=side / 3);
            MbLbpFeature {
                x: r.gen_range(0..=side - 3 * w),
                y: r.gen_range(0..=side - 3 * h),
                w,
                h,
            }
        })
        .collect();
    let stages = (0..3)
        .map(|_| {
            let n = r.gen_range(2..=4);
            Stage {
                threshold: r.gen_range(-0.6..0.2) * n as f64,
                weak_classifiers: (0..n)
                    .map(|_| WeakClassifier {
                        feature: r.gen_range(0..features.len()),
                        split: Split::Subset(std::array::from_fn(|_| r.gen())),
                        left: r.gen_range(-1.0..1.0),
                        right: r.gen_range(-1.0..1.0),
                    })
                    .collect(),
            }
        })
        .collect();
    CascadeModel {
        window_w: side,
        window_h: side,
        stages,
        features: FeatureTable::MbLbp(features),
    }
}

/// Random image with a few bright and dark squares on noise.
fn textured(r: &mut impl Rng, w: usize, h: usize) -> ImageBuffer {
    let squares: Vec<(usize, usize, usize, u8)> = (0..4)
        .map(|_| {
            let s = r.gen_range(4..w.min(h) / 2);
            (r.gen_range(0..w - s), r.gen_range(0..h - s), s, if r.gen() { 230 } else { 20 })
        })
        .collect();
    let noise: Vec<u8> = (0..w * h).map(|_| r.gen_range(90..160)).collect();
    ImageBuffer::from_gray_fn(w, h, |x, y| {
        squares
            .iter()
            .find(|&&(sx, sy, s, _)| x >= sx && x < sx + s && y >= sy && y < sy + s)
            .map_or(noise[y * w + x], |sq| sq.3)
    })
    .unwrap()
}

/// Scan output of random Haar and MB-LBP fixture cascades against the
/// brute-force enumeration, plus a single-pixel MB-LBP case with a known
/// answer.
pub fn check_cascade_windows() -> Check {
    let mut r = rng(37);
    let mut accepted = 0usize;
    let mut total = 0usize;
    for case in 0..16 {
        let lbp = case % 2 == 1;
        let model = if lbp {
            random_lbp_cascade(&mut r, 9 + 3 * (case as u32 % 3))
        } else {
            random_haar_cascade(&mut r, 12, 10)
        };
        model.validate().map_err(|e| format!("fixture {case}: {e}"))?;
        let img = textured(&mut r, 52, 44);
        let p = ScanParams {
            scale_factor: [1.1, 1.25, 1.5][case % 3],
            min_size: model.window_w.max(model.window_h),
            max_size: None,
            window_step: [1.0, 1.5, 2.0][case % 3],
            min_neighbors: 0,
            group_eps: 0.2,
        };
        let scan = scan_cascade(&model, &img, &p).map_err(|e| e.to_string())?;
        let want = enumerate_windows(&model, &img, &p);
        if scan.windows != want {
            return Err(format!(
                "fixture {case} ({}): scan accepted {} windows, enumeration {}",
                if lbp { "mb-lbp" } else { "haar" },
                scan.windows.len(),
                want.len()
            ));
        }
        accepted += want.len();
        total += scan.windows_scanned as usize;
    }
    if accepted == 0 || accepted == total {
        return Err(format!("degenerate fixtures: {accepted} of {total} windows accepted"));
    }

    // one stump that fires only on code 0, i.e. a center brighter than all
    // eight neighbors: on a black image with one lit pixel exactly one 3x3
    // window qualifies
    let mut mask = [0u32; 8];
    mask[0] = 1;
    let model = CascadeModel {
        window_w: 3,
        window_h: 3,
        stages: vec![Stage {
            threshold: 0.5,
            weak_classifiers: vec![WeakClassifier { feature: 0, split: Split::Subset(mask), left: 1.0, right: 0.0 }],
        }],
        features: FeatureTable::MbLbp(vec![MbLbpFeature { x: 0, y: 0, w: 1, h: 1 }]),
    };
    let img = ImageBuffer::from_gray_fn(20, 15, |x, y| if (x, y) == (11, 6) { 200 } else { 0 }).unwrap();
    let p = ScanParams { scale_factor: 2.0, min_size: 3, max_size: Some(3), min_neighbors: 0, ..ScanParams::default() };
    let scan = scan_cascade(&model, &img, &p).map_err(|e| e.to_string())?;
    let want = vec![BoundingBox::new(10.0, 5.0, 3.0, 3.0)];
    if scan.windows != want || enumerate_windows(&model, &img, &p) != want {
        return Err(format!("single-pixel fixture: got {:?}", scan.windows));
    }
    Ok(())
}

// ---------------------------------------------------------------- hog

fn crop(img: &ImageBuffer, x: usize, y: usize, n: usize) -> ImageBuffer {
    ImageBuffer::from_gray_fn(n, n, |i, j| img.get(x + i, y + j, 0)).unwrap()
}

/// Every scanned HOG window score against the model applied to the
/// descriptor of the cropped window, and the window count against the
/// pyramid geometry.
pub fn check_hog_scores(tol: f64) -> Check {
    let mut r = rng(53);
    let cfg = HogConfig::default();
    for case in 0..3 {
        let model = LinearSvmModel {
            weights: (0..cfg.descriptor_len()).map(|_| r.gen_range(-1.0..1.0)).collect(),
            bias: r.gen_range(-1.0..1.0),
            threshold: 0.0,
        };
        let (w, h) = [(150, 120), (64, 64), (97, 131)][case];
        let rgb = ImageBuffer::new(w, h, 3, (0..w * h * 3).map(|_| r.gen()).collect()).unwrap();
        let img = if case == 1 { textured(&mut r, w, h) } else { rgb };
        let p = HogDetectParams { stride: [8, 4, 7][case], ..HogDetectParams::default() };
        let scores = scan_hog(&model, &cfg, &img, &p).map_err(|e| e.to_string())?;
        let levels = build_pyramid(&to_grayscale(&img), p.pyramid_factor, cfg.window).map_err(|e| e.to_string())?;
        let expected: usize = levels
            .iter()
            .map(|l| {
                let (lw, lh) = (l.image.width(), l.image.height());
                if lw < cfg.window || lh < cfg.window {
                    0
                } else {
                    ((lw - cfg.window) / p.stride + 1) * ((lh - cfg.window) / p.stride + 1)
                }
            })
            .sum();
        if scores.len() != expected {
            return Err(format!("case {case}: {} windows scored, geometry gives {expected}", scores.len()));
        }
        for s in &scores {
            let window = crop(&levels[s.level].image, s.x, s.y, cfg.window);
            let d = hog_descriptor(&window, &cfg).map_err(|e| e.to_string())?;
            let mut direct = model.bias;
            for (wi, di) in model.weights.iter().zip(&d) {
                direct += wi * di;
            }
            if (s.score - direct).abs() > tol {
                return Err(format!(
                    "case {case} level {} ({}, {}): scan {} vs direct {direct}",
                    s.level, s.x, s.y, s.score
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- stats

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300) || a == b
}

/// 1-based type-7 position `1 + (n - 1) p` between order statistics.
fn type7(sorted: &[f64], p: f64) -> f64 {
    let pos = 1.0 + (sorted.len() as f64 - 1.0) * p;
    let j = pos.floor() as usize;
    let g = pos - j as f64;
    (1.0 - g) * sorted[j - 1] + g * sorted[j.min(sorted.len() - 1)]
}

/// `summarize` against textbook formulas on random samples.
pub fn check_summarize(tol: f64) -> Check {
    let mut r = rng(71);
    for case in 0..1000 {
        let n = if case < 5 { case + 1 } else { r.gen_range(1..80) };
        let xs: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..400.0)).collect();
        let s = summarize(&xs).ok_or("summarize returned None")?;
        let nf = n as f64;
        let sum: f64 = xs.iter().sum();
        let mean = sum / nf;
        // pairwise form: sum over i < j of (xi - xj)^2 equals n (n - 1) var
        let mut pairs = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                pairs += (xs[i] - xs[j]).powi(2);
            }
        }
        let sd = if n > 1 { (pairs / (nf * (nf - 1.0))).sqrt() } else { 0.0 };
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        let checks = [
            ("n", s.n as f64, nf),
            ("mean", s.mean, mean),
            ("sd", s.sd, sd),
            ("min", s.min, sorted[0]),
            ("max", s.max, sorted[n - 1]),
            ("q1", s.q1, type7(&sorted, 0.25)),
            ("median", s.median, median),
            ("q3", s.q3, type7(&sorted, 0.75)),
        ];
        for (name, got, want) in checks {
            if !close_rel(got, want, tol) {
                return Err(format!("n={n} {name}: {got} vs {want}"));
            }
        }
    }
    if summarize(&[]).is_some() {
        return Err("empty input summarized".into());
    }
    Ok(())
}
