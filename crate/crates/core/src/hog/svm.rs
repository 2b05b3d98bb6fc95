use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HSVM";
const VERSION: u32 = 1;

/// Linear decision function `w . x + b`; windows scoring above `threshold`
/// count as detections.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl LinearSvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trained model plus the per-epoch objective and any data warnings.
#[derive(Clone, Debug)]
pub struct SvmTraining {
    pub model: LinearSvmModel,
    /// Regularized hinge objective after each epoch.
    pub epoch_losses: Vec<f64>,
    pub warnings: Vec<String>,
}

/// `(lambda / 2) (|w|^2 + b^2) + mean(max(0, 1 - y (w . x + b)))`.
///
/// The bias is regularized like any other weight (it is the weight of a
/// constant feature).
pub fn hinge_objective(w: &[f64], b: f64, xs: &[&[f64]], ys: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (dot(w, w) + b * b);
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    reg + loss / xs.len() as f64
}

/// Subgradient of [`hinge_objective`] with respect to `(w, b)`; at margin
/// exactly 1 the zero branch is taken.
pub fn hinge_subgradient(
    w: &[f64],
    b: f64,
    xs: &[&[f64]],
    ys: &[f64],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    let mut gb = lambda * b;
    for (x, y) in xs.iter().zip(ys) {
        if y * (dot(w, x) + b) < 1.0 {
            for (g, xi) in gw.iter_mut().zip(x.iter()) {
                *g -= y * xi / n;
            }
            gb -= y / n;
        }
    }
    (gw, gb)
}

/// Primal stochastic subgradient descent on the regularized hinge loss with
/// step `1 / (lambda t)`; samples are reshuffled every epoch by a generator
/// seeded with `seed`.
pub fn train_linear_svm(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmTraining> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("svm training needs positive and negative samples"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("svm lambda must be > 0"));
    }
    let dim = pos[0].len();
    if let Some(bad) = pos.iter().chain(neg).find(|d| d.len() != dim) {
        return Err(Error::invalid(format!(
            "descriptor length mismatch: {} vs {dim}",
            bad.len()
        )));
    }
    let xs: Vec<&[f64]> = pos.iter().chain(neg).map(|v| v.as_slice()).collect();
    let ys: Vec<f64> = std::iter::repeat(1.0)
        .take(pos.len())
        .chain(std::iter::repeat(-1.0).take(neg.len()))
        .collect();

    let mut warnings = Vec::new();
    let bits = |v: &Vec<f64>| v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    let negatives: HashSet<Vec<u64>> = neg.iter().map(bits).collect();
    let contradictory = pos.iter().filter(|p| negatives.contains(&bits(p))).count();
    if contradictory > 0 {
        warnings.push(format!(
            "{contradictory} descriptor(s) appear with both labels; data is not separable"
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut t = 0u64;
    let mut epoch_losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let (x, y) = (xs[i], ys[i]);
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            b *= shrink;
            if margin < 1.0 {
                for (v, xi) in w.iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                b += eta * y;
            }
        }
        epoch_losses.push(hinge_objective(&w, b, &xs, &ys, lambda));
    }
    if w.iter().chain([&b]).any(|v| !v.is_finite()) {
        warnings.push("training diverged to non-finite weights".into());
    }
    Ok(SvmTraining {
        model: LinearSvmModel {
            weights: w,
            bias: b,
            threshold: 0.0,
        },
        epoch_losses,
        warnings,
    })
}

/// Little-endian `HSVM` encoding; values are stored as f32.
pub fn svm_to_bytes(model: &LinearSvmModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 4 * model.weights.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.weights.len() as u32).to_le_bytes());
    out.extend_from_slice(&(model.bias as f32).to_le_bytes());
    out.extend_from_slice(&(model.threshold as f32).to_le_bytes());
    for w in &model.weights {
        out.extend_from_slice(&(*w as f32).to_le_bytes());
    }
    out
}

pub fn parse_svm(bytes: &[u8]) -> Result<LinearSvmModel> {
    let bad = |m: &str| Error::WeightLoad(format!("hsvm: {m}"));
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(bad("missing HSVM header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let dim = u32_at(8) as usize;
    if bytes.len() != 20 + 4 * dim {
        return Err(bad(&format!(
            "expected {} bytes for dim {dim}, found {}",
            20 + 4 * dim,
            bytes.len()
        )));
    }
    Ok(LinearSvmModel {
        bias: f32_at(12),
        threshold: f32_at(16),
        weights: (0..dim).map(|i| f32_at(20 + 4 * i)).collect(),
    })
}

pub fn load_svm(path: impl AsRef<Path>) -> Result<LinearSvmModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_svm(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn clouds(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cloud = |cx: f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| vec![cx + rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0)])
                .collect()
        };
        (cloud(1.5), cloud(-1.5))
    }

    #[test]
    fn separable_clouds_fully_classified() {
        let (pos, neg) = clouds(40, 1);
        let t = train_linear_svm(&pos, &neg, 0.01, 50, 7).unwrap();
        assert!(t.warnings.is_empty());
        assert!(pos.iter().all(|x| t.model.decision(x) > 0.0));
        assert!(neg.iter().all(|x| t.model.decision(x) < 0.0));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let (pos, neg) = clouds(30, 2);
        let a = train_linear_svm(&pos, &neg, 0.05, 20, 99).unwrap().model;
        let b = train_linear_svm(&pos, &neg, 0.05, 20, 99).unwrap().model;
        assert_eq!(a, b);
    }

    #[test]
    fn contradictory_data_is_flagged_and_bounded() {
        let x = vec![vec![0.3, -0.7, 2.0]];
        let lambda = 0.1;
        let t = train_linear_svm(&x, &x, lambda, 30, 0).unwrap();
        assert_eq!(t.warnings.len(), 1);
        let norm = (dot(&t.model.weights, &t.model.weights) + t.model.bias.powi(2)).sqrt();
        assert!(norm <= 1.0 / lambda.sqrt() + 1e-9, "{norm}");
    }

    #[test]
    fn length_mismatch_rejected() {
        let r = train_linear_svm(&[vec![1.0, 2.0]], &[vec![1.0]], 0.1, 1, 0);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn subgradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lambda = 0.3;
        let mut checked = 0;
        while checked < 100 {
            let dim = rng.gen_range(1..6);
            let n = rng.gen_range(1..8);
            let data: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let xs: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
            let ys: Vec<f64> = (0..n).map(|_| if rng.gen() { 1.0 } else { -1.0 }).collect();
            let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = rng.gen_range(-1.0..1.0);
            // stay away from the hinge kink
            let near_kink = xs
                .iter()
                .zip(&ys)
                .any(|(x, y)| (y * (dot(&w, x) + b) - 1.0).abs() < 1e-3);
            if near_kink {
                continue;
            }
            let (gw, gb) = hinge_subgradient(&w, b, &xs, &ys, lambda);
            let h = 1e-5;
            let check = |analytic: f64, plus: f64, minus: f64| {
                let numeric = (plus - minus) / (2.0 * h);
                let scale = analytic.abs().max(numeric.abs()).max(1.0);
                assert!((analytic - numeric).abs() <= 1e-4 * scale, "{analytic} vs {numeric}");
            };
            for i in 0..dim {
                let mut wp = w.clone();
                wp[i] += h;
                let mut wm = w.clone();
                wm[i] -= h;
                check(
                    gw[i],
                    hinge_objective(&wp, b, &xs, &ys, lambda),
                    hinge_objective(&wm, b, &xs, &ys, lambda),
                );
            }
            check(
                gb,
                hinge_objective(&w, b + h, &xs, &ys, lambda),
                hinge_objective(&w, b - h, &xs, &ys, lambda),
            );
            checked += 1;
        }
    }

    #[test]
    fn windowed_loss_is_non_increasing_on_separable_data() {
        let (pos, neg) = clouds(50, 3);
        let t = train_linear_svm(&pos, &neg, 0.01, 60, 4).unwrap();
        let means: Vec<f64> = t
            .epoch_losses
            .chunks(10)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        for pair in means.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{means:?}");
        }
    }

    #[test]
    fn hsvm_round_trip() {
        let m = LinearSvmModel {
            weights: vec![0.5, -1.25, 3.0],
            bias: -0.75,
            threshold: 0.25,
        };
        let bytes = svm_to_bytes(&m);
        assert_eq!(&bytes[..4], b"HSVM");
        assert_eq!(bytes.len(), 20 + 12);
        assert_eq!(parse_svm(&bytes).unwrap(), m);
        assert!(parse_svm(&bytes[..bytes.len() - 1]).is_err());
    }
}
