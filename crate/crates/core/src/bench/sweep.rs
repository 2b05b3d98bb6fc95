use super::stats::{aggregate, Aggregation, TimingStats};
use super::{run_benchmark, BenchConfig, Resolution, Scene, TimingSample};
use crate::detectors::FaceDetector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub resolution: Resolution,
    pub stats: TimingStats,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub algorithm: String,
    pub points: Vec<SweepPoint>,
    pub samples: Vec<TimingSample>,
    pub notices: Vec<String>,
}

/// Benchmarks one detector at each resolution in `resolutions`, in order,
/// with `cfg` supplying everything except the resolution. A fixed-size
/// detector runs once at its native size; other requested sizes are skipped
/// with a notice.
pub fn resolution_sweep(
    det: &dyn FaceDetector,
    resolutions: &[Resolution],
    scenes: &[Scene],
    cfg: &BenchConfig,
    agg: Aggregation,
) -> Result<SweepResult> {
    if resolutions.is_empty() {
        return Err(Error::invalid("resolution sweep needs at least one resolution"));
    }
    let mut out = SweepResult {
        algorithm: det.name().to_string(),
        ..Default::default()
    };
    let plan: Vec<Resolution> = match det.native_resolution() {
        Some((w, h)) => {
            let native = Resolution::new(w, h);
            for r in resolutions.iter().filter(|r| **r != native) {
                out.notices
                    .push(format!("{}: skipping {r}, model only runs at {native}", det.name()));
            }
            vec![native]
        }
        None => resolutions.to_vec(),
    };
    for res in plan {
        let run = run_benchmark(&BenchConfig { resolution: res, ..cfg.clone() }, scenes, &[det])?;
        let row = aggregate(&run.samples, agg)
            .into_iter()
            .next()
            .ok_or_else(|| Error::EmptySamples(format!("{} at {res}", det.name())))?;
        out.points.push(SweepPoint {
            resolution: res,
            stats: row.stats,
        });
        out.samples.extend(run.samples);
    }
    Ok(out)
}
