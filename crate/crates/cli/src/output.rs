//! CSV rows and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 21] = [
    "model", "L", "N", "alpha", "J", "D", "theta", "phi", "lambda", "method", "fidelity", "g_corr", "g_fail", "O_x",
    "O_y", "O_z", "energy", "variance", "converged", "seed", "wall_time_ms",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub model: &'static str,
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "N")]
    pub junction: Option<usize>,
    pub alpha: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub lambda: Option<f64>,
    pub method: Option<&'static str>,
    pub fidelity: Option<f64>,
    pub g_corr: Option<f64>,
    pub g_fail: Option<f64>,
    #[serde(rename = "O_x")]
    pub o_x: Option<f64>,
    #[serde(rename = "O_y")]
    pub o_y: Option<f64>,
    #[serde(rename = "O_z")]
    pub o_z: Option<f64>,
    pub energy: Option<f64>,
    pub variance: Option<f64>,
    pub converged: Option<bool>,
    pub seed: u64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub csv_schema_version: u32,
    pub library_version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub jobs: usize,
    pub rows: usize,
    pub cache_hits: usize,
    pub csv: String,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Writes `<dir>/<command>.csv` and `<dir>/manifest.toml`, returning the CSV path.
pub fn write_run(dir: &Path, manifest: &Manifest, rows: &[Row]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv_path = dir.join(&manifest.csv);
    write_rows(&csv_path, rows)?;
    let text = toml::to_string(manifest).map_err(|e| CliError::Check(e.to_string()))?;
    let manifest_path = dir.join("manifest.toml");
    fs::write(&manifest_path, text).map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(csv_path)
}
