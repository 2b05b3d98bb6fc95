//! CSV emitters and readers. Every file has a header row and `\n` line
//! endings; resolutions are written as `WxH`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::score::ScoreCard;
use super::stats::{FaceCount, MeanRow, SpeedupRow, StatsRow, TimingStats};
use super::{Resolution, TimingSample};
use crate::error::{Error, Result};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv(format!("{}: {e}", path.display()))
}

fn write_rows<T: Serialize>(path: &Path, what: &str, rows: impl ExactSizeIterator<Item = T>) -> Result<()> {
    if rows.len() == 0 {
        return Err(Error::EmptySamples(format!("no {what} rows to write to {}", path.display())));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| csv_err(path, e))
}

#[derive(Serialize, Deserialize)]
struct StatsCsv {
    algorithm: String,
    resolution: Resolution,
    face_count: FaceCount,
    n: usize,
    mean_ms: f64,
    sd_ms: f64,
    min_ms: f64,
    q1_ms: f64,
    median_ms: f64,
    q3_ms: f64,
    max_ms: f64,
}

impl From<&StatsRow> for StatsCsv {
    fn from(r: &StatsRow) -> Self {
        let s = &r.stats;
        Self {
            algorithm: r.algorithm.clone(),
            resolution: r.resolution,
            face_count: r.face_count,
            n: s.n,
            mean_ms: s.mean,
            sd_ms: s.sd,
            min_ms: s.min,
            q1_ms: s.q1,
            median_ms: s.median,
            q3_ms: s.q3,
            max_ms: s.max,
        }
    }
}

impl From<StatsCsv> for StatsRow {
    fn from(c: StatsCsv) -> Self {
        Self {
            algorithm: c.algorithm,
            resolution: c.resolution,
            face_count: c.face_count,
            stats: TimingStats {
                n: c.n,
                mean: c.mean_ms,
                sd: c.sd_ms,
                min: c.min_ms,
                q1: c.q1_ms,
                median: c.median_ms,
                q3: c.q3_ms,
                max: c.max_ms,
            },
        }
    }
}

/// Five-number summary per algorithm, resolution and face count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub algorithm: String,
    pub resolution: Resolution,
    pub face_count: FaceCount,
    pub min_ms: f64,
    pub q1_ms: f64,
    pub median_ms: f64,
    pub q3_ms: f64,
    pub max_ms: f64,
}

pub fn write_samples_csv(path: impl AsRef<Path>, rows: &[TimingSample]) -> Result<()> {
    write_rows(path.as_ref(), "sample", rows.iter())
}

pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<Vec<TimingSample>> {
    read_rows(path.as_ref())
}

pub fn write_stats_csv(path: impl AsRef<Path>, rows: &[StatsRow]) -> Result<()> {
    write_rows(path.as_ref(), "stats", rows.iter().map(StatsCsv::from))
}

pub fn read_stats_csv(path: impl AsRef<Path>) -> Result<Vec<StatsRow>> {
    Ok(read_rows::<StatsCsv>(path.as_ref())?
        .into_iter()
        .map(StatsRow::from)
        .collect())
}

pub fn write_scores_csv(path: impl AsRef<Path>, rows: &[ScoreCard]) -> Result<()> {
    write_rows(path.as_ref(), "score", rows.iter())
}

pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<Vec<ScoreCard>> {
    read_rows(path.as_ref())
}

pub fn write_speedup_csv(path: impl AsRef<Path>, rows: &[SpeedupRow]) -> Result<()> {
    write_rows(path.as_ref(), "speedup", rows.iter())
}

pub fn read_speedup_csv(path: impl AsRef<Path>) -> Result<Vec<SpeedupRow>> {
    read_rows(path.as_ref())
}

/// Writes the per-face-count rows of `rows` (aggregate rows are left out).
pub fn write_boxplot_csv(path: impl AsRef<Path>, rows: &[StatsRow]) -> Result<()> {
    let rows: Vec<BoxplotRow> = rows
        .iter()
        .filter(|r| r.face_count != FaceCount::All)
        .map(|r| BoxplotRow {
            algorithm: r.algorithm.clone(),
            resolution: r.resolution,
            face_count: r.face_count,
            min_ms: r.stats.min,
            q1_ms: r.stats.q1,
            median_ms: r.stats.median,
            q3_ms: r.stats.q3,
            max_ms: r.stats.max,
        })
        .collect();
    write_rows(path.as_ref(), "boxplot", rows.iter())
}

/// Reads `algorithm` and the named mean column from any CSV holding one
/// mean per algorithm. When a `face_count` column exists only `all` rows
/// are used. Each algorithm must appear once.
pub fn read_mean_table(path: impl AsRef<Path>, column: &str) -> Result<Vec<MeanRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| Error::Csv(format!("{}: no {name:?} column", path.display()));
    let algo_i = col("algorithm").ok_or_else(|| missing("algorithm"))?;
    let mean_i = col(column).ok_or_else(|| missing(column))?;
    let fc_i = col("face_count");
    let mut out: Vec<MeanRow> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if let Some(i) = fc_i {
            if rec.get(i) != Some("all") {
                continue;
            }
        }
        let algorithm = rec.get(algo_i).unwrap_or("").to_string();
        let raw = rec.get(mean_i).unwrap_or("");
        let mean_ms: f64 = raw.trim().parse().map_err(|_| {
            Error::Csv(format!("{}: row {}: bad mean {raw:?}", path.display(), line + 2))
        })?;
        if out.iter().any(|m| m.algorithm == algorithm) {
            return Err(Error::Csv(format!(
                "{}: algorithm {algorithm} appears more than once",
                path.display()
            )));
        }
        out.push(MeanRow { algorithm, mean_ms });
    }
    if out.is_empty() {
        return Err(Error::EmptySamples(format!("{}: no mean rows", path.display())));
    }
    Ok(out)
}
