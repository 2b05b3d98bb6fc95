use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{hog_descriptor, scan_hog, train_linear_svm, HogConfig, HogDetectParams, SvmTraining};
use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, to_grayscale, ImageBuffer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HogTrainOptions {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Random crops drawn from each negative image.
    pub crops_per_negative: usize,
    /// Rounds of retraining on negative windows the current model accepts.
    pub mining_rounds: usize,
    /// Cap on mined windows kept per round, highest scores first.
    pub max_mined: usize,
    /// Mined windows must score above this.
    pub mining_margin: f64,
    /// Raise the model threshold to the best-scoring negative window of the
    /// final model, so no training negative is detected.
    pub calibrate_threshold: bool,
}

impl Default for HogTrainOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 20,
            seed: 7,
            crops_per_negative: 40,
            mining_rounds: 2,
            max_mined: 4000,
            mining_margin: -1.0,
            calibrate_threshold: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HogTrainReport {
    pub training: SvmTraining,
    pub positives: usize,
    /// Negative count per training round, random crops first.
    pub negatives_per_round: Vec<usize>,
}

fn window(img: &ImageBuffer, x: usize, y: usize, side: usize, n: usize) -> Result<ImageBuffer> {
    let crop = ImageBuffer::from_gray_fn(side, side, |cx, cy| img.get(x + cx, y + cy, 0))?;
    resize_bilinear(&crop, n, n)
}

/// Trains a face/non-face SVM. Positives are face crops (resized to the
/// window); negatives are face-free images sampled by random square crops,
/// then mined for false positives with the detector's own scan.
pub fn train_hog_detector(
    positives: &[ImageBuffer],
    negatives: &[ImageBuffer],
    cfg: &HogConfig,
    opts: &HogTrainOptions,
) -> Result<HogTrainReport> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::invalid("hog training needs positive and negative images"));
    }
    let n = cfg.window;
    let pos: Vec<Vec<f64>> = positives
        .iter()
        .map(|p| {
            let g = to_grayscale(p);
            hog_descriptor(&resize_bilinear(&g, n, n)?, cfg)
        })
        .collect::<Result<_>>()?;
    let grays: Vec<ImageBuffer> = negatives.iter().map(to_grayscale).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut neg = Vec::new();
    for g in &grays {
        let max_side = g.width().min(g.height());
        if max_side < n {
            continue;
        }
        for _ in 0..opts.crops_per_negative {
            let side = rng.gen_range(n..=max_side);
            let x = rng.gen_range(0..=g.width() - side);
            let y = rng.gen_range(0..=g.height() - side);
            neg.push(hog_descriptor(&window(g, x, y, side, n)?, cfg)?);
        }
    }
    if neg.is_empty() {
        return Err(Error::invalid(format!("every negative image is smaller than {n}x{n}")));
    }
    let mut negatives_per_round = vec![neg.len()];
    let mut training = train_linear_svm(&pos, &neg, opts.lambda, opts.epochs, opts.seed)?;
    let params = HogDetectParams::default();
    let scannable: Vec<&ImageBuffer> = grays.iter().filter(|g| g.width() >= n && g.height() >= n).collect();
    for _ in 0..opts.mining_rounds {
        let mut mined: Vec<(f64, Vec<f64>)> = Vec::new();
        for g in &scannable {
            let levels = crate::imaging::build_pyramid(g, params.pyramid_factor, n)?;
            for s in scan_hog(&training.model, cfg, g, &params)? {
                if s.score > opts.mining_margin {
                    let level = &levels[s.level].image;
                    mined.push((s.score, hog_descriptor(&window(level, s.x, s.y, n, n)?, cfg)?));
                }
            }
        }
        if mined.is_empty() {
            break;
        }
        mined.sort_by(|a, b| b.0.total_cmp(&a.0));
        neg.extend(mined.into_iter().take(opts.max_mined).map(|m| m.1));
        negatives_per_round.push(neg.len());
        training = train_linear_svm(&pos, &neg, opts.lambda, opts.epochs, opts.seed)?;
    }
    if opts.calibrate_threshold {
        let mut top = training.model.threshold;
        for g in &scannable {
            for s in scan_hog(&training.model, cfg, g, &params)? {
                top = top.max(s.score);
            }
        }
        training.model.threshold = top;
    }
    Ok(HogTrainReport {
        training,
        positives: pos.len(),
        negatives_per_round,
    })
}
