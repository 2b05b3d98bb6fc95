//! BlazeFace single-shot detector with 896 anchors, linear anchor-relative
//! decoding, clipped-sigmoid scores, six landmarks and blending NMS.

mod nets;

use std::path::Path;

pub use nets::blazeface_spec;

use crate::detection::{nms_blend, BoundingBox, Detection, Landmark, LandmarkKind};
use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, to_rgb, ImageBuffer};
use crate::nn::ops::sigmoid_scalar;
use crate::nn::{Network, RunTrace, Tensor, WeightFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlazeKind {
    Front,
    Rear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlazeVariant {
    pub kind: BlazeKind,
    pub input_size: usize,
    /// `(grid side, anchors per cell)` per output layer.
    pub anchor_layers: Vec<(usize, usize)>,
    pub score_threshold: f64,
    pub blend_iou: f64,
}

impl BlazeVariant {
    pub fn front() -> Self {
        Self::new(BlazeKind::Front, 128)
    }

    pub fn rear() -> Self {
        Self::new(BlazeKind::Rear, 256)
    }

    fn new(kind: BlazeKind, input_size: usize) -> Self {
        Self {
            kind,
            input_size,
            anchor_layers: vec![(16, 2), (8, 6)],
            score_threshold: 0.75,
            blend_iou: 0.3,
        }
    }

    pub fn of(kind: BlazeKind) -> Self {
        match kind {
            BlazeKind::Front => Self::front(),
            BlazeKind::Rear => Self::rear(),
        }
    }

    pub fn anchor_count(&self) -> usize {
        self.anchor_layers.iter().map(|(g, a)| g * g * a).sum()
    }
}

/// Normalized anchor center; the prior size is 1 x 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub cx: f64,
    pub cy: f64,
}

pub const ANCHOR_COUNT: usize = 896;
/// Values per anchor: box center and size, then six landmark points.
pub const RAW_STRIDE: usize = 16;

/// Landmark names in output order.
pub const LANDMARKS: [LandmarkKind; 6] = [
    LandmarkKind::RightEye,
    LandmarkKind::LeftEye,
    LandmarkKind::NoseTip,
    LandmarkKind::MouthCenter,
    LandmarkKind::RightEar,
    LandmarkKind::LeftEar,
];

/// Anchors per layer, row-major over grid cells, repeated per cell.
pub fn generate_anchors(v: &BlazeVariant) -> Vec<Anchor> {
    let mut out = Vec::with_capacity(v.anchor_count());
    for &(grid, per_cell) in &v.anchor_layers {
        for r in 0..grid {
            for c in 0..grid {
                let a = Anchor {
                    cx: (c as f64 + 0.5) / grid as f64,
                    cy: (r as f64 + 0.5) / grid as f64,
                };
                out.extend(std::iter::repeat(a).take(per_cell));
            }
        }
    }
    out
}

/// Decodes raw regressor rows (`anchors.len() x 16`) and logits into
/// detections in input-image pixels. Rows scoring at or below
/// `score_threshold` and rows with non-positive size are dropped.
pub fn decode_predictions(
    raw_boxes: &[f32],
    raw_scores: &[f32],
    anchors: &[Anchor],
    input_size: usize,
    score_threshold: f64,
) -> Result<Vec<Detection>> {
    let n = anchors.len();
    if raw_boxes.len() != n * RAW_STRIDE || raw_scores.len() != n {
        return Err(Error::shape(
            "decode_predictions",
            format!(
                "expected {}x{RAW_STRIDE} boxes and {n} scores, got {} and {}",
                n,
                raw_boxes.len(),
                raw_scores.len()
            ),
        ));
    }
    let size = input_size as f64;
    let mut out = Vec::new();
    for (i, a) in anchors.iter().enumerate() {
        let score = sigmoid_scalar(raw_scores[i]) as f64;
        if score <= score_threshold {
            continue;
        }
        let raw = &raw_boxes[i * RAW_STRIDE..(i + 1) * RAW_STRIDE];
        let r = |k: usize| raw[k] as f64 / size;
        let (cx, cy, w, h) = (a.cx + r(0), a.cy + r(1), r(2), r(3));
        let bbox = BoundingBox::new((cx - w / 2.0) * size, (cy - h / 2.0) * size, w * size, h * size);
        if !bbox.is_valid() {
            continue;
        }
        let landmarks = LANDMARKS
            .iter()
            .enumerate()
            .map(|(k, &name)| Landmark {
                name,
                x: (a.cx + r(4 + 2 * k)) * size,
                y: (a.cy + r(5 + 2 * k)) * size,
            })
            .collect();
        out.push(Detection::new(bbox, score).with_landmarks(landmarks));
    }
    Ok(out)
}

/// A variant with its bound backbone.
#[derive(Clone, Debug)]
pub struct BlazeFaceModel {
    pub variant: BlazeVariant,
    pub network: Network,
    anchors: Vec<Anchor>,
}

impl BlazeFaceModel {
    pub fn new(variant: BlazeVariant, weights: &WeightFile) -> Result<Self> {
        let network = Network::new(blazeface_spec(variant.kind), weights)?;
        let anchors = generate_anchors(&variant);
        Ok(Self { variant, network, anchors })
    }

    pub fn load(kind: BlazeKind, path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BlazeVariant::of(kind), &WeightFile::load(path)?)
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }
}

/// Flattens the two heads in `(row, col, anchor)` order, fine grid first.
fn gather(fine: &Tensor, coarse: &Tensor, per_anchor: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(ANCHOR_COUNT * per_anchor);
    for t in [fine, coarse] {
        let (c, h, w) = t.shape();
        for r in 0..h {
            for col in 0..w {
                for ch in 0..c {
                    out.push(t.at(ch, r, col));
                }
            }
        }
    }
    out
}

/// Resizes to the variant's square input, runs the backbone, decodes,
/// blends and maps detections back to the original image.
pub fn detect_blazeface(img: &ImageBuffer, model: &BlazeFaceModel) -> Result<Vec<Detection>> {
    Ok(detect_blazeface_traced(img, model)?.0)
}

pub fn detect_blazeface_traced(img: &ImageBuffer, model: &BlazeFaceModel) -> Result<(Vec<Detection>, RunTrace)> {
    let v = &model.variant;
    let size = v.input_size;
    let rgb = to_rgb(img);
    let resized = resize_bilinear(&rgb, size, size)?;
    let input = Tensor::from_image(&resized, |p| p as f32 / 127.5 - 1.0);
    let (out, trace) = model.network.run_traced(&input)?;
    let scores = gather(&out["classifier_8"], &out["classifier_16"], 1);
    let boxes = gather(&out["regressor_8"], &out["regressor_16"], RAW_STRIDE);
    let dets = decode_predictions(&boxes, &scores, &model.anchors, size, v.score_threshold)?;
    let sx = img.width() as f64 / size as f64;
    let sy = img.height() as f64 / size as f64;
    let dets = nms_blend(&dets, v.blend_iou)
        .iter()
        .map(|d| d.scaled(sx, sy))
        .collect();
    Ok((dets, trace))
}
