//! CSV summaries and the JSON-lines run log.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sweep measurement: columns `metric, n, k, l, S, seed, value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub seed: u64,
    pub value: f64,
}

/// A training-curve point: the metric columns prefixed by `model, epoch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub model: String,
    pub epoch: usize,
    pub metric: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub seed: u64,
    pub value: f64,
}

pub const METRIC_COLUMNS: [&str; 7] = ["metric", "n", "k", "l", "S", "seed", "value"];
pub const CURVE_COLUMNS: [&str; 9] = ["model", "epoch", "metric", "n", "k", "l", "S", "seed", "value"];

fn check_name(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        return Err(Error::Output(format!("{what} {s:?} must be a nonempty [A-Za-z0-9_] identifier")));
    }
    Ok(())
}

pub fn validate_metric_rows(rows: &[MetricRow]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for r in rows {
        check_name("metric", &r.metric)?;
        if !r.value.is_finite() {
            return Err(Error::Output(format!("metric {} has non-finite value {}", r.metric, r.value)));
        }
        if r.k * r.l != r.n {
            return Err(Error::Output(format!("metric {}: k*l = {}*{} != n = {}", r.metric, r.k, r.l, r.n)));
        }
        if !seen.insert((r.metric.as_str(), r.n, r.k, r.l, r.s, r.seed)) {
            return Err(Error::Output(format!("duplicate row for metric {} at k = {}", r.metric, r.k)));
        }
    }
    Ok(())
}

/// One row per (model, epoch, metric); finite values; consistent geometry.
pub fn validate_curve_rows(rows: &[CurveRow]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for r in rows {
        check_name("model", &r.model)?;
        check_name("metric", &r.metric)?;
        if !r.value.is_finite() {
            return Err(Error::Output(format!("{} {} epoch {}: non-finite value", r.model, r.metric, r.epoch)));
        }
        if r.k * r.l != r.n {
            return Err(Error::Output(format!("{}: k*l = {}*{} != n = {}", r.model, r.k, r.l, r.n)));
        }
        if !seen.insert((r.model.as_str(), r.epoch, r.metric.as_str())) {
            return Err(Error::Output(format!("duplicate row ({}, {}, {})", r.model, r.epoch, r.metric)));
        }
    }
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metric_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    validate_metric_rows(rows)?;
    write_rows(path, rows, &METRIC_COLUMNS)
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    validate_curve_rows(rows)?;
    write_rows(path, rows, &CURVE_COLUMNS)
}

pub fn read_metric_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(METRIC_COLUMNS) {
        return Err(Error::Output(format!("{}: header is not {}", path.display(), METRIC_COLUMNS.join(","))));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(CURVE_COLUMNS) {
        return Err(Error::Output(format!("{}: header is not {}", path.display(), CURVE_COLUMNS.join(","))));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Appends JSON objects, one per line.
pub struct JsonLog {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl JsonLog {
    pub fn create(path: &Path) -> Result<Self> {
        Self::open(path, false)
    }

    pub fn append(path: &Path) -> Result<Self> {
        Self::open(path, true)
    }

    fn open(path: &Path, append: bool) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = fs::OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(JsonLog { out: BufWriter::new(file), path: path.to_path_buf() })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        self.out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))?;
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}
