use serde::{Deserialize, Serialize};

use super::{BenchRun, Resolution, Scene, SceneLabel};
use crate::detection::{iou, BoundingBox, Detection};
use crate::error::{Error, Result};

/// Minimum IoU for a detection to count as finding a face.
pub const MATCH_IOU: f64 = 0.5;

/// One scene's detections with its ground truth, in the same pixel frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub label: SceneLabel,
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<BoundingBox>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub algorithm: String,
    pub resolution: Resolution,
    pub no_false_positives: bool,
    pub finds_one_large: bool,
    pub finds_two_small: bool,
    pub points: u8,
}

impl ScoreCard {
    pub fn new(
        algorithm: impl Into<String>,
        resolution: Resolution,
        no_false_positives: bool,
        finds_one_large: bool,
        finds_two_small: bool,
    ) -> Self {
        Self {
            algorithm: algorithm.into(),
            resolution,
            no_false_positives,
            finds_one_large,
            finds_two_small,
            points: no_false_positives as u8 + finds_one_large as u8 + finds_two_small as u8,
        }
    }
}

/// Number of truths matched by distinct detections, pairing greedily by
/// descending IoU among pairs at or above [`MATCH_IOU`].
fn matched_truths(dets: &[Detection], truth: &[BoundingBox]) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in truth.iter().enumerate() {
        for (di, d) in dets.iter().enumerate() {
            let v = iou(&d.bbox, t);
            if v >= MATCH_IOU {
                pairs.push((v, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_t = vec![false; truth.len()];
    let mut used_d = vec![false; dets.len()];
    let mut n = 0;
    for (_, ti, di) in pairs {
        if !used_t[ti] && !used_d[di] {
            used_t[ti] = true;
            used_d[di] = true;
            n += 1;
        }
    }
    n
}

/// Scores one algorithm at one resolution. Every label needs at least one
/// outcome; a criterion holds only if it holds on every scene of its label.
pub fn score_algorithm(
    algorithm: &str,
    resolution: Resolution,
    outcomes: &[ScenarioOutcome],
) -> Result<ScoreCard> {
    let of = |label: SceneLabel| -> Result<Vec<&ScenarioOutcome>> {
        let v: Vec<_> = outcomes.iter().filter(|o| o.label == label).collect();
        if v.is_empty() {
            return Err(Error::invalid(format!("no {label:?} scene to score {algorithm}")));
        }
        Ok(v)
    };
    let with_truth = |label: SceneLabel, n: usize| -> Result<Vec<&ScenarioOutcome>> {
        let v = of(label)?;
        if let Some(o) = v.iter().find(|o| o.ground_truth.len() != n) {
            return Err(Error::invalid(format!(
                "{label:?} scene needs {n} ground-truth boxes, has {}",
                o.ground_truth.len()
            )));
        }
        Ok(v)
    };
    let empty = of(SceneLabel::Empty)?.iter().all(|o| o.detections.is_empty());
    let large = with_truth(SceneLabel::OneLarge, 1)?
        .iter()
        .all(|o| matched_truths(&o.detections, &o.ground_truth) == 1);
    let small = with_truth(SceneLabel::TwoSmall, 2)?
        .iter()
        .all(|o| matched_truths(&o.detections, &o.ground_truth) == 2);
    Ok(ScoreCard::new(algorithm, resolution, empty, large, small))
}

/// Score cards for every algorithm and resolution of a bench run, using the
/// final detections per scene.
pub fn score_bench_run(run: &BenchRun, scenes: &[Scene]) -> Result<Vec<ScoreCard>> {
    let mut keys: Vec<(String, Resolution)> = Vec::new();
    for d in &run.detections {
        let k = (d.algorithm.clone(), d.resolution);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(algo, res)| {
            let outcomes = run
                .detections
                .iter()
                .filter(|d| d.algorithm == algo && d.resolution == res)
                .map(|d| {
                    let scene = scenes
                        .iter()
                        .find(|s| s.spec.id == d.scene_id)
                        .ok_or_else(|| Error::invalid(format!("unknown scene {}", d.scene_id)))?;
                    Ok(ScenarioOutcome {
                        label: scene.spec.label,
                        detections: d.detections.clone(),
                        ground_truth: scene.ground_truth_at(res),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            score_algorithm(&algo, res, &outcomes)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(b: BoundingBox) -> Detection {
        Detection::new(b, 1.0)
    }

    fn suite(empty: Vec<Detection>, large: Vec<Detection>, small: Vec<Detection>) -> Vec<ScenarioOutcome> {
        vec![
            ScenarioOutcome { label: SceneLabel::Empty, detections: empty, ground_truth: vec![] },
            ScenarioOutcome { label: SceneLabel::OneLarge, detections: large, ground_truth: vec![big()] },
            ScenarioOutcome { label: SceneLabel::TwoSmall, detections: small, ground_truth: smalls().to_vec() },
        ]
    }

    fn big() -> BoundingBox {
        BoundingBox::new(10.0, 10.0, 100.0, 100.0)
    }

    fn smalls() -> [BoundingBox; 2] {
        [BoundingBox::new(0.0, 0.0, 20.0, 20.0), BoundingBox::new(50.0, 0.0, 20.0, 20.0)]
    }

    #[test]
    fn null_detector_gets_one_point() {
        let c = score_algorithm("null", Resolution::new(64, 64), &suite(vec![], vec![], vec![])).unwrap();
        assert_eq!(c.points, 1);
        assert!(c.no_false_positives);
    }

    #[test]
    fn oracle_gets_three() {
        let c = score_algorithm(
            "oracle",
            Resolution::new(64, 64),
            &suite(vec![], vec![det(big())], smalls().map(det).to_vec()),
        )
        .unwrap();
        assert_eq!(c.points, 3);
    }

    #[test]
    fn half_of_the_small_faces_is_not_enough() {
        let c = score_algorithm(
            "half",
            Resolution::new(64, 64),
            &suite(vec![det(big())], vec![det(big())], vec![det(smalls()[0]), det(smalls()[0])]),
        )
        .unwrap();
        assert_eq!((c.no_false_positives, c.finds_one_large, c.finds_two_small), (false, true, false));
        assert_eq!(c.points, 1);
    }

    #[test]
    fn greedy_matching_uses_distinct_detections() {
        // one wide box overlapping both truths only matches one of them
        let wide = BoundingBox::new(0.0, 0.0, 70.0, 20.0);
        assert_eq!(matched_truths(&[det(wide)], &smalls()), 0);
        assert_eq!(matched_truths(&[det(smalls()[1]), det(smalls()[0])], &smalls()), 2);
    }

    #[test]
    fn missing_label_is_an_error() {
        let mut s = suite(vec![], vec![], vec![]);
        s.pop();
        assert!(score_algorithm("x", Resolution::new(8, 8), &s).is_err());
    }
}
