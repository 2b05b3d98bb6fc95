use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Resolution, TimingSample};
use crate::error::{Error, Result};

/// 25 frames per second.
pub const REALTIME_BUDGET_MS: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator), 0 for a single sample.
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data at `x[(n-1)p]`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary statistics, or `None` for an empty group.
pub fn summarize(values: &[f64]) -> Option<TimingStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(TimingStats {
        n,
        mean,
        sd,
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

/// Grouping key for the face-count column: a scene face count or every
/// scene combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceCount {
    Count(usize),
    All,
}

impl fmt::Display for FaceCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceCount::Count(n) => write!(f, "{n}"),
            FaceCount::All => f.write_str("all"),
        }
    }
}

impl FromStr for FaceCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(FaceCount::All),
            t => t
                .parse()
                .map(FaceCount::Count)
                .map_err(|_| Error::invalid(format!("bad face_count {s:?}"))),
        }
    }
}

impl Serialize for FaceCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FaceCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// How samples from different scenes are pooled into one `all` row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Pool every sample; scenes ran for equal time, so faster scenes
    /// contribute more frames.
    #[default]
    EqualTime,
    /// Each scene contributes the same number of frames: its first `k`
    /// samples, `k` being the smallest per-scene count.
    EqualFrames,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsRow {
    pub algorithm: String,
    pub resolution: Resolution,
    pub face_count: FaceCount,
    pub stats: TimingStats,
}

/// Groups in order of first appearance.
fn group_by<'a, K: Ord + Clone>(
    samples: &'a [TimingSample],
    key: impl Fn(&TimingSample) -> K,
) -> Vec<(K, Vec<&'a TimingSample>)> {
    let mut order: Vec<K> = Vec::new();
    let mut groups: BTreeMap<K, Vec<&TimingSample>> = BTreeMap::new();
    for s in samples {
        let k = key(s);
        groups
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k.clone());
                Vec::new()
            })
            .push(s);
    }
    order
        .into_iter()
        .map(|k| {
            let g = groups.remove(&k).unwrap_or_default();
            (k, g)
        })
        .collect()
}

fn pooled(group: &[&TimingSample], agg: Aggregation) -> Vec<f64> {
    match agg {
        Aggregation::EqualTime => group.iter().map(|s| s.elapsed_ms).collect(),
        Aggregation::EqualFrames => {
            let scenes = group_by_refs(group);
            let k = scenes.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
            scenes
                .iter()
                .flat_map(|(_, v)| v[..k].iter().map(|s| s.elapsed_ms))
                .collect()
        }
    }
}

fn group_by_refs<'a>(group: &[&'a TimingSample]) -> Vec<(&'a str, Vec<&'a TimingSample>)> {
    let mut out: Vec<(&str, Vec<&TimingSample>)> = Vec::new();
    for s in group {
        match out.iter_mut().find(|(id, _)| *id == s.scene_id) {
            Some((_, v)) => v.push(s),
            None => out.push((&s.scene_id, vec![s])),
        }
    }
    out
}

/// One row per algorithm and resolution over all scenes.
pub fn aggregate(samples: &[TimingSample], agg: Aggregation) -> Vec<StatsRow> {
    group_by(samples, |s| (s.algorithm.clone(), s.resolution))
        .into_iter()
        .filter_map(|((algorithm, resolution), g)| {
            summarize(&pooled(&g, agg)).map(|stats| StatsRow {
                algorithm,
                resolution,
                face_count: FaceCount::All,
                stats,
            })
        })
        .collect()
}

/// Per-face-count rows for every algorithm and resolution, face counts
/// ascending, followed by the aggregate row.
pub fn summarize_by_face_count(samples: &[TimingSample], agg: Aggregation) -> Vec<StatsRow> {
    let all = aggregate(samples, agg);
    let mut out = Vec::new();
    for row in all {
        let mut per: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for s in samples
            .iter()
            .filter(|s| s.algorithm == row.algorithm && s.resolution == row.resolution)
        {
            per.entry(s.face_count).or_default().push(s.elapsed_ms);
        }
        for (fc, v) in per {
            if let Some(stats) = summarize(&v) {
                out.push(StatsRow {
                    algorithm: row.algorithm.clone(),
                    resolution: row.resolution,
                    face_count: FaceCount::Count(fc),
                    stats,
                });
            }
        }
        out.push(row);
    }
    out
}

/// Mean latency of one algorithm, the input of comparisons and realtime
/// checks.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanRow {
    pub algorithm: String,
    pub mean_ms: f64,
}

impl From<&StatsRow> for MeanRow {
    fn from(r: &StatsRow) -> Self {
        Self {
            algorithm: r.algorithm.clone(),
            mean_ms: r.stats.mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub algorithm: String,
    pub mean_a_ms: f64,
    pub mean_b_ms: f64,
    /// `mean_b_ms / mean_a_ms`, unrounded.
    pub speedup: f64,
}

impl SpeedupRow {
    /// Speedup rounded to two decimals for reports.
    pub fn rounded(&self) -> f64 {
        (self.speedup * 100.0).round() / 100.0
    }
}

/// Per-algorithm ratio `b / a`, in the order of `a`. Both tables must name
/// the same algorithms.
pub fn compare_runs(a: &[MeanRow], b: &[MeanRow]) -> Result<Vec<SpeedupRow>> {
    let find = |t: &[MeanRow], name: &str| t.iter().find(|r| r.algorithm == name).cloned();
    let mut missing: Vec<String> = a
        .iter()
        .filter(|r| find(b, &r.algorithm).is_none())
        .map(|r| format!("{} (absent from second table)", r.algorithm))
        .collect();
    missing.extend(
        b.iter()
            .filter(|r| find(a, &r.algorithm).is_none())
            .map(|r| format!("{} (absent from first table)", r.algorithm)),
    );
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "algorithm mismatch: {}",
            missing.join(", ")
        )));
    }
    a.iter()
        .map(|ra| {
            let rb = find(b, &ra.algorithm).expect("checked above");
            if !(ra.mean_ms > 0.0) {
                return Err(Error::invalid(format!(
                    "{}: first mean must be > 0",
                    ra.algorithm
                )));
            }
            Ok(SpeedupRow {
                algorithm: ra.algorithm.clone(),
                mean_a_ms: ra.mean_ms,
                mean_b_ms: rb.mean_ms,
                speedup: rb.mean_ms / ra.mean_ms,
            })
        })
        .collect()
}

/// Whether each algorithm's mean fits the budget, inclusive.
pub fn realtime_check(means: &[MeanRow], budget_ms: f64) -> Result<Vec<(String, bool)>> {
    if !(budget_ms > 0.0) {
        return Err(Error::invalid("realtime budget must be > 0"));
    }
    Ok(means
        .iter()
        .map(|r| (r.algorithm.clone(), r.mean_ms <= budget_ms))
        .collect())
}
