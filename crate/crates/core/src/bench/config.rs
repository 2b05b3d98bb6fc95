//! JSON suite files: bench settings plus the scene list. Scene paths are
//! relative to the file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::stats::{Aggregation, REALTIME_BUDGET_MS};
use super::{BenchConfig, Resolution, RunLength, Scene, SceneLabel, SceneSpec};
use crate::detection::BoundingBox;
use crate::detectors::Algorithm;
use crate::error::{Error, Result};
use crate::imaging::io::load_image;

fn default_warmup() -> usize {
    10
}

fn default_budget() -> f64 {
    REALTIME_BUDGET_MS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: SceneLabel,
    /// Defaults to 0, 1 or 2 according to the label.
    #[serde(default)]
    pub expected_face_count: Option<usize>,
    #[serde(default)]
    pub ground_truth: Option<Vec<BoundingBox>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub resolution: Option<Resolution>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub duration_ms: Option<u64>,
    #[serde(default = "default_warmup")]
    pub warmup_iterations: usize,
    #[serde(default = "default_budget")]
    pub realtime_budget_ms: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Sizes for resolution sweeps.
    #[serde(default)]
    pub resolutions: Vec<Resolution>,
    pub scenes: Vec<SceneEntry>,
    /// Directory the file was read from; scene paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl BenchFile {
    pub fn parse(json: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut f: BenchFile = serde_json::from_str(json)
            .map_err(|e| Error::invalid(format!("bench config: {e}")))?;
        f.base_dir = base_dir.into();
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&json, base)
    }

    fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::invalid("bench config: no algorithms"));
        }
        self.algorithms()?;
        if self.scenes.is_empty() {
            return Err(Error::invalid("bench config: no scenes"));
        }
        for s in self.scene_specs() {
            s.validate()?;
        }
        match (self.iterations, self.duration_ms) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(Error::invalid(
                    "bench config: set exactly one of iterations and duration_ms",
                ))
            }
        }
        Ok(())
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms.iter().map(|a| a.parse()).collect()
    }

    /// Run settings at `resolution` (falls back to the file's resolution).
    pub fn bench_config(&self, resolution: Option<Resolution>) -> Result<BenchConfig> {
        let resolution = resolution
            .or(self.resolution)
            .ok_or_else(|| Error::invalid("bench config: no resolution"))?;
        let run = match (self.iterations, self.duration_ms) {
            (Some(n), _) => RunLength::Iterations(n),
            (None, Some(ms)) => RunLength::Duration(Duration::from_millis(ms)),
            (None, None) => return Err(Error::invalid("bench config: no run length")),
        };
        let cfg = BenchConfig {
            resolution,
            run,
            warmup_iterations: self.warmup_iterations,
            realtime_budget_ms: self.realtime_budget_ms,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scene_specs(&self) -> Vec<SceneSpec> {
        self.scenes
            .iter()
            .map(|e| SceneSpec {
                id: e.id.clone(),
                path: self.base_dir.join(&e.path),
                label: e.label,
                expected_face_count: e.expected_face_count.unwrap_or(match e.label {
                    SceneLabel::Empty => 0,
                    SceneLabel::OneLarge => 1,
                    SceneLabel::TwoSmall => 2,
                }),
                ground_truth: e.ground_truth.clone(),
            })
            .collect()
    }
}

/// Decodes every scene image.
pub fn load_scenes(specs: &[SceneSpec]) -> Result<Vec<Scene>> {
    specs
        .iter()
        .map(|spec| {
            spec.validate()?;
            Ok(Scene {
                image: load_image(&spec.path)?,
                spec: spec.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUITE: &str = r#"{
        "algorithms": ["haar", "lbp"],
        "resolution": "640x480",
        "iterations": 3,
        "scenes": [
            {"id": "empty", "path": "scenes/empty.png", "label": "empty"},
            {"id": "large", "path": "scenes/one.png", "label": "one_large",
             "ground_truth": [{"x": 1, "y": 2, "w": 30, "h": 30}]}
        ]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let f = BenchFile::parse(SUITE, "/suite").unwrap();
        let cfg = f.bench_config(None).unwrap();
        assert_eq!(cfg.run, RunLength::Iterations(3));
        assert_eq!(cfg.warmup_iterations, 10);
        assert_eq!(cfg.realtime_budget_ms, 40.0);
        assert_eq!(f.aggregation, Aggregation::EqualTime);
        let specs = f.scene_specs();
        assert_eq!(specs[0].path, Path::new("/suite/scenes/empty.png"));
        assert_eq!(specs[1].expected_face_count, 1);
    }

    #[test]
    fn run_length_must_be_exactly_one() {
        let both = SUITE.replace("\"iterations\": 3", "\"iterations\": 3, \"duration_ms\": 5");
        assert!(BenchFile::parse(&both, ".").is_err());
        let neither = SUITE.replace("\"iterations\": 3,", "");
        assert!(BenchFile::parse(&neither, ".").is_err());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(BenchFile::parse(&SUITE.replace("\"lbp\"", "\"sift\""), ".").is_err());
        let wrong_truth = SUITE.replace("\"label\": \"empty\"", "\"label\": \"empty\", \"ground_truth\": [{\"x\":0,\"y\":0,\"w\":1,\"h\":1}]");
        assert!(BenchFile::parse(&wrong_truth, ".").is_err());
        assert!(BenchFile::parse(&SUITE.replace("\"iterations\"", "\"iters\""), ".").is_err());
    }
}
