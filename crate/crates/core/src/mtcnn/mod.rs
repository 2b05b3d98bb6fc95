//! Three-stage MTCNN: pyramid P-Net proposals, R-Net refinement and O-Net
//! output with five landmarks.

mod nets;

use std::path::Path;

pub use nets::{onet_spec, pnet_spec, rnet_spec};

use crate::detection::{nms_keep, BoundingBox, Detection, Landmark, LandmarkKind, OverlapMode};
use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, to_rgb, ImageBuffer};
use crate::nn::{Network, Tensor, WeightFile};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MtcnnParams {
    pub min_face_size: f64,
    /// Pyramid shrink per level, in `(0, 1)`.
    pub scale_factor: f64,
    /// Face-probability cutoffs for P-Net, R-Net and O-Net.
    pub thresholds: [f64; 3],
    /// Per-scale NMS, merged P-Net NMS, R-Net NMS, final min-mode NMS.
    pub nms: [f64; 4],
}

impl Default for MtcnnParams {
    fn default() -> Self {
        Self {
            min_face_size: 20.0,
            scale_factor: 0.709,
            thresholds: [0.6, 0.7, 0.7],
            nms: [0.5, 0.7, 0.7, 0.7],
        }
    }
}

impl MtcnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_face_size < 12.0 {
            return Err(Error::invalid("mtcnn min_face_size must be >= 12"));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor < 1.0) {
            return Err(Error::invalid("mtcnn scale_factor must be in (0, 1)"));
        }
        if self
            .thresholds
            .iter()
            .chain(&self.nms)
            .any(|t| !(*t > 0.0 && *t < 1.0))
        {
            return Err(Error::invalid("mtcnn thresholds must be in (0, 1)"));
        }
        Ok(())
    }
}

/// A box with its face score and the regression offsets predicted for it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub bbox: BoundingBox,
    pub score: f64,
    /// `(dx1, dy1, dx2, dy2)` in units of the box width and height.
    pub offsets: [f64; 4],
}

/// Scales `12/min_face * factor^k` while the scaled shorter side is >= 12.
pub fn compute_scale_pyramid(min_face: f64, factor: f64, width: usize, height: usize) -> Result<Vec<f64>> {
    if min_face < 12.0 {
        return Err(Error::invalid("min_face must be >= 12"));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::invalid("pyramid factor must be in (0, 1)"));
    }
    let min_side = width.min(height) as f64;
    let mut scales = Vec::new();
    let mut s = 12.0 / min_face;
    while min_side * s >= 12.0 {
        scales.push(s);
        s *= factor;
    }
    Ok(scales)
}

/// Cells of a P-Net output whose face probability exceeds `threshold`,
/// in row-major order. `prob` is the 2-channel softmax map (channel 1 is
/// the face class) and `reg` the 4-channel offset map.
pub fn pnet_decode(prob: &Tensor, reg: &Tensor, scale: f64, threshold: f64) -> Result<Vec<Candidate>> {
    let (pc, h, w) = prob.shape();
    if pc != 2 || reg.shape() != (4, h, w) {
        return Err(Error::shape(
            "pnet_decode",
            format!("prob {:?} and reg {:?} do not pair up", prob.shape(), reg.shape()),
        ));
    }
    let side = 12.0 / scale;
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let p = prob.at(1, r, c) as f64;
            if p > threshold {
                out.push(Candidate {
                    bbox: BoundingBox::new(
                        (2.0 * c as f64 / scale).floor(),
                        (2.0 * r as f64 / scale).floor(),
                        side,
                        side,
                    ),
                    score: p,
                    offsets: std::array::from_fn(|k| reg.at(k, r, c) as f64),
                });
            }
        }
    }
    Ok(out)
}

/// Applies regression offsets scaled by the box width and height.
pub fn refine_box(b: &BoundingBox, offsets: &[f64; 4]) -> BoundingBox {
    let [dx1, dy1, dx2, dy2] = *offsets;
    BoundingBox::from_corners(
        b.x + dx1 * b.w,
        b.y + dy1 * b.h,
        b.x2() + dx2 * b.w,
        b.y2() + dy2 * b.h,
    )
}

/// Refines every candidate, dropping those whose refined box degenerates.
pub fn refine_boxes(cands: &[Candidate]) -> Vec<Candidate> {
    cands
        .iter()
        .filter_map(|c| {
            let b = refine_box(&c.bbox, &c.offsets);
            b.is_valid().then_some(Candidate {
                bbox: b,
                offsets: [0.0; 4],
                ..*c
            })
        })
        .collect()
}

/// Square of side `max(w, h)` around the same center.
pub fn square_pad(b: &BoundingBox) -> BoundingBox {
    let side = b.w.max(b.h);
    let (cx, cy) = b.center();
    BoundingBox::new(cx - side / 2.0, cy - side / 2.0, side, side)
}

/// Bilinear `size x size` crop of `box` with zeros outside the image,
/// normalized as `(p - 127.5) / 128`. Grayscale input is replicated to three
/// channels.
pub fn crop_resize(img: &ImageBuffer, b: &BoundingBox, size: usize) -> Tensor {
    let (w, h, ch) = (img.width() as isize, img.height() as isize, img.channels());
    let px = img.data();
    let pixel = |x: isize, y: isize, c: usize| -> f32 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            px[(y * w + x) as usize * ch + c.min(ch - 1)] as f32
        }
    };
    let step_x = b.w / size as f64;
    let step_y = b.h / size as f64;
    Tensor::from_fn(3, size, size, |c, oy, ox| {
        let sx = b.x + (ox as f64 + 0.5) * step_x - 0.5;
        let sy = b.y + (oy as f64 + 0.5) * step_y - 0.5;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = ((sx - x0) as f32, (sy - y0) as f32);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let top = pixel(x0, y0, c) * (1.0 - fx) + pixel(x0 + 1, y0, c) * fx;
        let bottom = pixel(x0, y0 + 1, c) * (1.0 - fx) + pixel(x0 + 1, y0 + 1, c) * fx;
        let v = top * (1.0 - fy) + bottom * fy;
        (v - 127.5) / 128.0
    })
}

/// The three bound networks.
#[derive(Clone, Debug)]
pub struct MtcnnModels {
    pub pnet: Network,
    pub rnet: Network,
    pub onet: Network,
}

impl MtcnnModels {
    pub fn new(pnet: &WeightFile, rnet: &WeightFile, onet: &WeightFile) -> Result<Self> {
        Ok(Self {
            pnet: Network::new(pnet_spec(), pnet)?,
            rnet: Network::new(rnet_spec(), rnet)?,
            onet: Network::new(onet_spec(), onet)?,
        })
    }

    /// Loads `pnet.fdnw`, `rnet.fdnw` and `onet.fdnw` from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::new(
            &WeightFile::load(dir.join("pnet.fdnw"))?,
            &WeightFile::load(dir.join("rnet.fdnw"))?,
            &WeightFile::load(dir.join("onet.fdnw"))?,
        )
    }
}

/// Work counters of one pipeline run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MtcnnTrace {
    /// Stages that ran (1 to 3).
    pub stages_executed: usize,
    pub network_invocations: usize,
    /// Boxes surviving each stage that ran.
    pub survivors: Vec<usize>,
}

/// Landmark names in O-Net output order; left and right are as seen in
/// the image.
pub const LANDMARKS: [LandmarkKind; 5] = [
    LandmarkKind::LeftEye,
    LandmarkKind::RightEye,
    LandmarkKind::NoseTip,
    LandmarkKind::MouthLeft,
    LandmarkKind::MouthRight,
];

fn nms(cands: &[Candidate], threshold: f64, mode: OverlapMode) -> Vec<Candidate> {
    let boxes: Vec<BoundingBox> = cands.iter().map(|c| c.bbox).collect();
    let scores: Vec<f64> = cands.iter().map(|c| c.score).collect();
    nms_keep(&boxes, &scores, threshold, mode)
        .into_iter()
        .map(|i| cands[i])
        .collect()
}

fn squared(cands: Vec<Candidate>) -> Vec<Candidate> {
    cands
        .into_iter()
        .map(|c| Candidate {
            bbox: square_pad(&c.bbox),
            ..c
        })
        .collect()
}

fn head(out: &std::collections::BTreeMap<String, Tensor>, tap: &str) -> Vec<f64> {
    out[tap].data().iter().map(|&v| v as f64).collect()
}

pub fn detect_mtcnn(img: &ImageBuffer, params: &MtcnnParams, models: &MtcnnModels) -> Result<Vec<Detection>> {
    Ok(detect_mtcnn_traced(img, params, models)?.0)
}

pub fn detect_mtcnn_traced(
    img: &ImageBuffer,
    params: &MtcnnParams,
    models: &MtcnnModels,
) -> Result<(Vec<Detection>, MtcnnTrace)> {
    params.validate()?;
    let rgb = to_rgb(img);
    let (w, h) = (rgb.width(), rgb.height());
    let mut trace = MtcnnTrace::default();
    let [nms_scale, nms_merge, nms_r, nms_o] = params.nms;

    // stage 1
    trace.stages_executed = 1;
    let mut proposals = Vec::new();
    for scale in compute_scale_pyramid(params.min_face_size, params.scale_factor, w, h)? {
        let sw = ((w as f64 * scale).round() as usize).max(1);
        let sh = ((h as f64 * scale).round() as usize).max(1);
        let level = resize_bilinear(&rgb, sw, sh)?;
        let input = Tensor::from_image(&level, |p| (p as f32 - 127.5) / 128.0);
        let out = models.pnet.run(&input)?;
        trace.network_invocations += 1;
        let cands = pnet_decode(&out["prob"], &out["reg"], scale, params.thresholds[0])?;
        proposals.extend(nms(&cands, nms_scale, OverlapMode::Union));
    }
    let proposals = nms(&proposals, nms_merge, OverlapMode::Union);
    let proposals = squared(refine_boxes(&proposals));
    trace.survivors.push(proposals.len());
    if proposals.is_empty() {
        return Ok((Vec::new(), trace));
    }

    // stage 2
    trace.stages_executed = 2;
    let mut refined = Vec::new();
    for c in &proposals {
        let out = models.rnet.run(&crop_resize(&rgb, &c.bbox, 24))?;
        trace.network_invocations += 1;
        let p = head(&out, "prob")[1];
        if p > params.thresholds[1] {
            let reg = head(&out, "reg");
            refined.push(Candidate {
                bbox: c.bbox,
                score: p,
                offsets: [reg[0], reg[1], reg[2], reg[3]],
            });
        }
    }
    let refined = squared(refine_boxes(&nms(&refined, nms_r, OverlapMode::Union)));
    trace.survivors.push(refined.len());
    if refined.is_empty() {
        return Ok((Vec::new(), trace));
    }

    // stage 3
    trace.stages_executed = 3;
    let mut finals = Vec::new();
    let mut points = Vec::new();
    for c in &refined {
        let out = models.onet.run(&crop_resize(&rgb, &c.bbox, 48))?;
        trace.network_invocations += 1;
        let p = head(&out, "prob")[1];
        if p <= params.thresholds[2] {
            continue;
        }
        let reg = head(&out, "reg");
        let lm = head(&out, "landmarks");
        let b = c.bbox;
        let landmarks: Vec<Landmark> = LANDMARKS
            .iter()
            .enumerate()
            .map(|(k, &kind)| Landmark {
                name: kind,
                x: b.x + lm[k] * b.w,
                y: b.y + lm[5 + k] * b.h,
            })
            .collect();
        let bbox = refine_box(&b, &[reg[0], reg[1], reg[2], reg[3]]);
        if bbox.is_valid() {
            finals.push(Candidate { bbox, score: p, offsets: [0.0; 4] });
            points.push(landmarks);
        }
    }
    let boxes: Vec<BoundingBox> = finals.iter().map(|c| c.bbox).collect();
    let scores: Vec<f64> = finals.iter().map(|c| c.score).collect();
    let dets: Vec<Detection> = nms_keep(&boxes, &scores, nms_o, OverlapMode::Min)
        .into_iter()
        .map(|i| Detection::new(finals[i].bbox, finals[i].score).with_landmarks(points[i].clone()))
        .collect();
    trace.survivors.push(dets.len());
    Ok((dets, trace))
}
