//! CSV rows and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use dbr_core::online::EpisodeLog;
use serde::Serialize;

use crate::error::{LabError, Result};

/// One measurement. `n` is empty for population-level rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub replicate: usize,
    pub seed: u64,
    pub n: Option<usize>,
    pub algorithm: String,
    pub metric: String,
    pub value: f64,
}

pub const CSV_HEADER: &str = "experiment,replicate,seed,n,algorithm,metric,value";

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(|e| csv_error(path, e))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn write_episode_log(path: &Path, logs: &[EpisodeLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for log in logs {
        w.serialize(log).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Config(format!("cannot write {}: {other:?}", path.display())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub id: String,
    pub kind: String,
    pub code_version: &'static str,
    pub wall_time_seconds: f64,
    pub rows: usize,
    pub results: String,
    pub episode_logs: Vec<String>,
    /// The configuration as loaded, with CLI overrides applied.
    pub config: serde_json::Value,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(path, text + "\n").map_err(|e| LabError::io(path, e))
}

/// Files produced by one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFiles {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub episode_logs: Vec<PathBuf>,
}
