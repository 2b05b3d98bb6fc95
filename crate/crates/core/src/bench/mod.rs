//! Latency benchmark harness: timed detection loops over scene suites,
//! summary statistics, resolution sweeps, the three-criterion score card,
//! realtime checks and cross-run speedups.

mod config;
mod csvio;
mod score;
mod stats;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use config::{load_scenes, BenchFile, SceneEntry};
pub use csvio::{
    read_mean_table, read_samples_csv, read_scores_csv, read_speedup_csv, read_stats_csv,
    write_boxplot_csv, write_samples_csv, write_scores_csv, write_speedup_csv, write_stats_csv,
    BoxplotRow,
};
pub use score::{score_algorithm, score_bench_run, ScenarioOutcome, ScoreCard, MATCH_IOU};
pub use stats::{
    aggregate, compare_runs, quantile, realtime_check, summarize, summarize_by_face_count,
    Aggregation, FaceCount, MeanRow, SpeedupRow, StatsRow, TimingStats, REALTIME_BUDGET_MS,
};
pub use sweep::{resolution_sweep, SweepPoint, SweepResult};

use crate::detection::{BoundingBox, Detection};
use crate::detectors::FaceDetector;
use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, ImageBuffer};

/// Image size `w x h`, written as `WxH`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Resolution {
    pub w: usize,
    pub h: usize,
}

impl Resolution {
    pub const fn new(w: usize, h: usize) -> Self {
        Self { w, h }
    }

    pub fn pixels(&self) -> usize {
        self.w * self.h
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.w, self.h)
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("resolution must look like 640x480, got {s:?}"));
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let w: usize = w.parse().map_err(|_| bad())?;
        let h: usize = h.parse().map_err(|_| bad())?;
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok(Self { w, h })
    }
}

impl Serialize for Resolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Resolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneLabel {
    Empty,
    OneLarge,
    TwoSmall,
}

/// A scene description; ground truth is in the scene image's own pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub id: String,
    pub path: PathBuf,
    pub label: SceneLabel,
    pub expected_face_count: usize,
    pub ground_truth: Option<Vec<BoundingBox>>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.expected_face_count > 2 {
            return Err(Error::invalid(format!(
                "scene {}: expected_face_count must be 0, 1 or 2",
                self.id
            )));
        }
        if let Some(gt) = &self.ground_truth {
            if gt.len() != self.expected_face_count {
                return Err(Error::invalid(format!(
                    "scene {}: {} ground-truth boxes for {} faces",
                    self.id,
                    gt.len(),
                    self.expected_face_count
                )));
            }
        }
        Ok(())
    }
}

/// A scene with its decoded image.
#[derive(Clone, Debug)]
pub struct Scene {
    pub spec: SceneSpec,
    pub image: ImageBuffer,
}

impl Scene {
    /// Ground truth mapped onto the image resized to `res`.
    pub fn ground_truth_at(&self, res: Resolution) -> Vec<BoundingBox> {
        let sx = res.w as f64 / self.image.width() as f64;
        let sy = res.h as f64 / self.image.height() as f64;
        self.spec
            .ground_truth
            .iter()
            .flatten()
            .map(|b| b.scaled(sx, sy))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunLength {
    /// Timed loop per scene lasting at least this long.
    Duration(Duration),
    Iterations(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub resolution: Resolution,
    pub run: RunLength,
    pub warmup_iterations: usize,
    pub realtime_budget_ms: f64,
}

impl BenchConfig {
    pub fn iterations(resolution: Resolution, n: usize) -> Self {
        Self {
            resolution,
            run: RunLength::Iterations(n),
            warmup_iterations: 10,
            realtime_budget_ms: REALTIME_BUDGET_MS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.run {
            RunLength::Iterations(0) => return Err(Error::invalid("iterations must be >= 1")),
            RunLength::Duration(d) if d.is_zero() => {
                return Err(Error::invalid("duration must be > 0"))
            }
            _ => {}
        }
        if !(self.realtime_budget_ms > 0.0) {
            return Err(Error::invalid("realtime budget must be > 0"));
        }
        Ok(())
    }
}

/// One timed detect call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub algorithm: String,
    pub scene_id: String,
    pub face_count: usize,
    pub resolution: Resolution,
    pub elapsed_ms: f64,
}

/// Detections of the last timed call of one algorithm on one scene.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneDetections {
    pub algorithm: String,
    pub scene_id: String,
    pub resolution: Resolution,
    pub detections: Vec<Detection>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchRun {
    /// Samples in execution order.
    pub samples: Vec<TimingSample>,
    pub detections: Vec<SceneDetections>,
    /// Human-readable remarks such as native-resolution overrides.
    pub notices: Vec<String>,
}

/// Resolution a detector actually runs at when `requested` is configured.
pub fn effective_resolution(det: &dyn FaceDetector, requested: Resolution) -> Resolution {
    det.native_resolution()
        .map(|(w, h)| Resolution::new(w, h))
        .unwrap_or(requested)
}

/// Times every detector on every scene, one at a time. The scene is resized
/// once before the loop; warmup calls are untimed; each timed call covers
/// the full `detect`.
pub fn run_benchmark(cfg: &BenchConfig, scenes: &[Scene], detectors: &[&dyn FaceDetector]) -> Result<BenchRun> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(Error::invalid("benchmark needs at least one scene"));
    }
    if detectors.is_empty() {
        return Err(Error::invalid("benchmark needs at least one detector"));
    }
    let mut run = BenchRun::default();
    for det in detectors {
        let res = effective_resolution(*det, cfg.resolution);
        if res != cfg.resolution {
            run.notices.push(format!(
                "{}: runs at its native {res} instead of {}",
                det.name(),
                cfg.resolution
            ));
        }
        for scene in scenes {
            let frame = resize_bilinear(&scene.image, res.w, res.h)?;
            for _ in 0..cfg.warmup_iterations {
                det.detect(&frame)?;
            }
            let mut last = Vec::new();
            let mut time_one = |run: &mut BenchRun| -> Result<()> {
                let start = Instant::now();
                let dets = det.detect(&frame)?;
                let elapsed = start.elapsed();
                run.samples.push(TimingSample {
                    algorithm: det.name().to_string(),
                    scene_id: scene.spec.id.clone(),
                    face_count: scene.spec.expected_face_count,
                    resolution: res,
                    elapsed_ms: elapsed.as_secs_f64() * 1e3,
                });
                last = dets;
                Ok(())
            };
            match cfg.run {
                RunLength::Iterations(n) => {
                    for _ in 0..n {
                        time_one(&mut run)?;
                    }
                }
                RunLength::Duration(d) => {
                    let loop_start = Instant::now();
                    while loop_start.elapsed() < d {
                        time_one(&mut run)?;
                    }
                }
            }
            run.detections.push(SceneDetections {
                algorithm: det.name().to_string(),
                scene_id: scene.spec.id.clone(),
                resolution: res,
                detections: last,
            });
        }
    }
    Ok(run)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn iteration_count_is_exact_and_warmup_hidden() {
        let det = SleepDetector::new("stub", 0.0);
        let mut cfg = BenchConfig::iterations(Resolution::new(32, 24), 5);
        cfg.warmup_iterations = 3;
        let run = run_benchmark(&cfg, &[scene("a", SceneLabel::Empty, 0)], &[&det]).unwrap();
        assert_eq!(run.samples.len(), 5);
        assert_eq!(det.calls.borrow().len(), 8);
    }

    #[test]
    fn duration_mode_sample_count_is_bounded() {
        let det = SleepDetector::new("stub", 10.0);
        let cfg = BenchConfig {
            run: RunLength::Duration(Duration::from_millis(300)),
            warmup_iterations: 0,
            ..BenchConfig::iterations(Resolution::new(16, 16), 1)
        };
        let run = run_benchmark(&cfg, &[scene("a", SceneLabel::Empty, 0)], &[&det]).unwrap();
        let n = run.samples.len();
        assert!((25..=35).contains(&n), "{n} samples");
    }

    #[test]
    fn timed_region_is_the_detect_call_on_a_resized_frame() {
        let det = SleepDetector::new("stub", 2.0);
        let mut cfg = BenchConfig::iterations(Resolution::new(640, 480), 4);
        cfg.warmup_iterations = 1;
        let run = run_benchmark(&cfg, &[scene("a", SceneLabel::Empty, 0)], &[&det]).unwrap();
        let calls = det.calls.borrow();
        for (sample, (t0, t1, w, h)) in run.samples.iter().zip(&calls[1..]) {
            assert_eq!((*w, *h), (640, 480));
            let inside = t1.duration_since(*t0).as_secs_f64() * 1e3;
            assert!(sample.elapsed_ms >= inside);
            assert!(sample.elapsed_ms - inside < 1.0, "{} vs {inside}", sample.elapsed_ms);
        }
    }

    #[test]
    fn fixed_size_detector_runs_natively() {
        let mut det = SleepDetector::new("fixed", 0.0);
        det.native = Some((128, 128));
        let cfg = BenchConfig::iterations(Resolution::new(64, 64), 2);
        let run = run_benchmark(&cfg, &[scene("a", SceneLabel::Empty, 0)], &[&det]).unwrap();
        assert!(run.samples.iter().all(|s| s.resolution == Resolution::new(128, 128)));
        assert_eq!(run.notices.len(), 1);
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!("640x480".parse::<Resolution>().unwrap(), Resolution::new(640, 480));
        assert!("640".parse::<Resolution>().is_err());
        assert!("0x5".parse::<Resolution>().is_err());
        assert_eq!(Resolution::new(32, 32).to_string(), "32x32");
    }
}
