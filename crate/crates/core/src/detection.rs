//! Detection geometry shared by all detectors: boxes, landmarks, overlap,
//! suppression and cascade-style rectangle grouping.

use serde::{Deserialize, Serialize};

/// Axis-aligned box in pixels, `(x, y)` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Box from corner coordinates.
    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.x.is_finite() && self.y.is_finite()
    }

    pub fn x2(&self) -> f64 {
        self.x + self.w
    }

    pub fn y2(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn intersection(&self, other: &BoundingBox) -> f64 {
        let w = self.x2().min(other.x2()) - self.x.max(other.x);
        let h = self.y2().min(other.y2()) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Scales coordinates independently along each axis.
    pub fn scaled(&self, sx: f64, sy: f64) -> Self {
        Self::new(self.x * sx, self.y * sy, self.w * sx, self.h * sy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkKind {
    LeftEye,
    RightEye,
    NoseTip,
    MouthLeft,
    MouthRight,
    MouthCenter,
    LeftEar,
    RightEar,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: LandmarkKind,
    pub x: f64,
    pub y: f64,
}

/// Universal detector output. Cascades and HOG report no landmarks; MTCNN
/// reports five and BlazeFace six.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub score: f64,
    #[serde(default)]
    pub landmarks: Vec<Landmark>,
}

impl Detection {
    pub fn new(bbox: BoundingBox, score: f64) -> Self {
        Self {
            bbox,
            score,
            landmarks: Vec::new(),
        }
    }

    pub fn with_landmarks(mut self, landmarks: Vec<Landmark>) -> Self {
        self.landmarks = landmarks;
        self
    }

    /// Maps the detection from one raster into another by per-axis scaling.
    pub fn scaled(&self, sx: f64, sy: f64) -> Self {
        Self {
            bbox: self.bbox.scaled(sx, sy),
            score: self.score,
            landmarks: self
                .landmarks
                .iter()
                .map(|l| Landmark {
                    name: l.name,
                    x: l.x * sx,
                    y: l.y * sy,
                })
                .collect(),
        }
    }
}

/// Intersection over union; 0 for disjoint or degenerate boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).min(1.0)
    }
}

/// Intersection over the smaller of the two areas.
pub fn overlap_min(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b);
    let smaller = a.area().min(b.area());
    if inter <= 0.0 || smaller <= 0.0 {
        0.0
    } else {
        (inter / smaller).min(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OverlapMode {
    #[default]
    Union,
    Min,
}

impl OverlapMode {
    fn overlap(self, a: &BoundingBox, b: &BoundingBox) -> f64 {
        match self {
            OverlapMode::Union => iou(a, b),
            OverlapMode::Min => overlap_min(a, b),
        }
    }
}

/// Indices sorted by descending score; equal scores keep input order.
fn score_order(dets: &[Detection]) -> Vec<usize> {
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    order_by_score(&scores)
}

fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Greedy hard NMS with IoU overlap.
pub fn nms_hard(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    nms_hard_with(dets, iou_threshold, OverlapMode::Union)
}

/// Greedy hard NMS: keep the best remaining detection, drop every other one
/// whose overlap with it exceeds the threshold. Output is in descending score.
pub fn nms_hard_with(dets: &[Detection], threshold: f64, mode: OverlapMode) -> Vec<Detection> {
    let boxes: Vec<BoundingBox> = dets.iter().map(|d| d.bbox).collect();
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    nms_keep(&boxes, &scores, threshold, mode)
        .into_iter()
        .map(|i| dets[i].clone())
        .collect()
}

/// Indices kept by greedy hard NMS, in descending score order.
pub fn nms_keep(boxes: &[BoundingBox], scores: &[f64], threshold: f64, mode: OverlapMode) -> Vec<usize> {
    let order = order_by_score(scores);
    let mut suppressed = vec![false; order.len()];
    let mut keep = Vec::new();
    for i in 0..order.len() {
        if suppressed[i] {
            continue;
        }
        let seed = &boxes[order[i]];
        keep.push(order[i]);
        for j in i + 1..order.len() {
            if !suppressed[j] && mode.overlap(seed, &boxes[order[j]]) > threshold {
                suppressed[j] = true;
            }
        }
    }
    keep
}

/// Blending NMS: every greedy overlap cluster collapses into one detection
/// whose box and landmarks are score-weighted means of the members. The
/// cluster keeps the seed's score.
pub fn nms_blend(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let order = score_order(dets);
    let mut taken = vec![false; order.len()];
    let mut out = Vec::new();
    for i in 0..order.len() {
        if taken[i] {
            continue;
        }
        let seed = &dets[order[i]];
        let mut members = vec![order[i]];
        taken[i] = true;
        for j in i + 1..order.len() {
            if !taken[j] && iou(&seed.bbox, &dets[order[j]].bbox) > iou_threshold {
                taken[j] = true;
                members.push(order[j]);
            }
        }
        out.push(blend(dets, &members, seed));
    }
    out
}

fn blend(dets: &[Detection], members: &[usize], seed: &Detection) -> Detection {
    let total: f64 = members.iter().map(|&m| dets[m].score).sum();
    if members.len() == 1 || total <= 0.0 {
        return seed.clone();
    }
    let mean = |f: &dyn Fn(&Detection) -> f64| {
        members
            .iter()
            .map(|&m| f(&dets[m]) * dets[m].score)
            .sum::<f64>()
            / total
    };
    let x1 = mean(&|d| d.bbox.x);
    let y1 = mean(&|d| d.bbox.y);
    let x2 = mean(&|d| d.bbox.x2());
    let y2 = mean(&|d| d.bbox.y2());
    let landmarks = seed
        .landmarks
        .iter()
        .map(|lm| {
            let find = |d: &Detection| d.landmarks.iter().find(|o| o.name == lm.name).copied();
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for &m in members {
                if let Some(o) = find(&dets[m]) {
                    sx += o.x * dets[m].score;
                    sy += o.y * dets[m].score;
                    sw += dets[m].score;
                }
            }
            Landmark {
                name: lm.name,
                x: sx / sw,
                y: sy / sw,
            }
        })
        .collect();
    Detection {
        bbox: BoundingBox::from_corners(x1, y1, x2, y2),
        score: seed.score,
        landmarks,
    }
}

/// Whether two boxes fall in the same group: every edge differs by at most
/// `eps` times the mean of the two boxes' average side length.
fn similar(a: &BoundingBox, b: &BoundingBox, eps: f64) -> bool {
    let size = ((a.w + a.h) / 2.0 + (b.w + b.h) / 2.0) / 2.0;
    let delta = eps * size;
    (a.x - b.x).abs() <= delta
        && (a.y - b.y).abs() <= delta
        && (a.x2() - b.x2()).abs() <= delta
        && (a.y2() - b.y2()).abs() <= delta
}

fn find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Clusters boxes by the similarity relation (transitively closed), drops
/// clusters with fewer than `min_neighbors + 1` members and emits each
/// surviving cluster's mean box with score 1.0. Clusters are reported in
/// order of their first member.
pub fn group_rectangles(boxes: &[BoundingBox], min_neighbors: usize, eps: f64) -> Vec<Detection> {
    let n = boxes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if similar(&boxes[i], &boxes[j], eps) {
                let (ri, rj) = (find_root(&mut parent, i), find_root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find_root(&mut parent, i);
        match clusters.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => clusters.push((root, vec![i])),
        }
    }
    clusters
        .into_iter()
        .filter(|(_, members)| members.len() > min_neighbors)
        .map(|(_, members)| {
            let k = members.len() as f64;
            let sum = members.iter().fold([0.0; 4], |mut acc, &m| {
                let b = &boxes[m];
                acc[0] += b.x;
                acc[1] += b.y;
                acc[2] += b.w;
                acc[3] += b.h;
                acc
            });
            Detection::new(
                BoundingBox::new(sum[0] / k, sum[1] / k, sum[2] / k, sum[3] / k),
                1.0,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64, y: f64, w: f64, h: f64, score: f64) -> Detection {
        Detection::new(BoundingBox::new(x, y, w, h), score)
    }

    #[test]
    fn iou_cases() {
        let a = BoundingBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BoundingBox::new(5.0, 5.0, 1.0, 1.0)), 0.0);
        let b = BoundingBox::new(1.0, 1.0, 2.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
        // touching edges do not overlap
        assert_eq!(iou(&a, &BoundingBox::new(2.0, 0.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn min_overlap_of_nested_box_is_one() {
        let outer = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let inner = BoundingBox::new(2.0, 2.0, 3.0, 3.0);
        assert_eq!(overlap_min(&outer, &inner), 1.0);
        assert!(iou(&outer, &inner) < 0.1);
    }

    #[test]
    fn nms_hard_cases() {
        assert!(nms_hard(&[], 0.5).is_empty());
        let one = vec![det(1.0, 2.0, 3.0, 4.0, 0.3)];
        assert_eq!(nms_hard(&one, 0.5), one);
        let two = vec![det(0.0, 0.0, 10.0, 10.0, 0.8), det(0.0, 0.0, 10.0, 10.0, 0.9)];
        let kept = nms_hard(&two, 0.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn nms_hard_tie_prefers_earlier_index() {
        let dets = vec![det(0.0, 0.0, 10.0, 10.0, 0.5), det(1.0, 0.0, 10.0, 10.0, 0.5)];
        let kept = nms_hard(&dets, 0.3);
        assert_eq!(kept, vec![dets[0].clone()]);
    }

    #[test]
    fn nms_blend_cases() {
        let one = vec![det(1.0, 2.0, 3.0, 4.0, 0.3)];
        assert_eq!(nms_blend(&one, 0.3), one);

        let same = vec![det(4.0, 4.0, 8.0, 8.0, 0.9), det(4.0, 4.0, 8.0, 8.0, 0.1)];
        let out = nms_blend(&same, 0.3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox, same[0].bbox);

        // Threshold 0 so the shifted box joins the cluster.
        let shifted = vec![det(0.0, 0.0, 100.0, 100.0, 0.6), det(10.0, 0.0, 100.0, 100.0, 0.2)];
        let out = nms_blend(&shifted, 0.0);
        assert_eq!(out.len(), 1);
        assert!((out[0].bbox.x - 2.5).abs() < 1e-12);
        assert_eq!(out[0].score, 0.6);
    }

    #[test]
    fn nms_blend_averages_landmarks() {
        let lm = |x| {
            vec![Landmark {
                name: LandmarkKind::NoseTip,
                x,
                y: 1.0,
            }]
        };
        let dets = vec![
            det(0.0, 0.0, 10.0, 10.0, 0.75).with_landmarks(lm(4.0)),
            det(0.0, 0.0, 10.0, 10.0, 0.25).with_landmarks(lm(8.0)),
        ];
        let out = nms_blend(&dets, 0.3);
        assert!((out[0].landmarks[0].x - 5.0).abs() < 1e-12);
    }

    #[test]
    fn group_rectangles_cases() {
        let b = BoundingBox::new(3.0, 4.0, 24.0, 24.0);
        let out = group_rectangles(&[b], 0, 0.2);
        assert_eq!(out, vec![Detection::new(b, 1.0)]);
        assert!(group_rectangles(&[b], 3, 0.2).is_empty());

        let boxes: Vec<_> = [10.0, 11.0, 12.0]
            .iter()
            .map(|&x| BoundingBox::new(x, 5.0, 24.0, 24.0))
            .collect();
        let out = group_rectangles(&boxes, 2, 0.2);
        assert_eq!(out.len(), 1);
        assert!((out[0].bbox.x - 11.0).abs() < 1e-12);
        assert_eq!(out[0].score, 1.0);
    }

    #[test]
    fn json_record_layout() {
        let d = det(1.0, 2.0, 3.0, 4.0, 0.5).with_landmarks(vec![Landmark {
            name: LandmarkKind::LeftEye,
            x: 1.5,
            y: 2.5,
        }]);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(
            json,
            r#"{"x":1.0,"y":2.0,"w":3.0,"h":4.0,"score":0.5,"landmarks":[{"name":"left_eye","x":1.5,"y":2.5}]}"#
        );
        let back: Detection = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
