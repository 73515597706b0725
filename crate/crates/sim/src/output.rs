//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::experiment::{ExperimentResult, MethodTable};

pub const CSV_HEADER: [&str; 5] = ["scan", "ospa_mean", "ospa_std", "card_mean", "card_truth"];

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    seed: u64,
    mc_runs: u32,
    files: Vec<String>,
    config: &'a ScenarioConfig,
}

pub fn write_table(path: &Path, table: &MethodTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        w.write_record([
            r.scan.to_string(),
            r.ospa_mean.to_string(),
            r.ospa_std.to_string(),
            r.card_mean.to_string(),
            r.card_truth.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<method>.csv` for every table plus `manifest.json`; returns the paths written.
pub fn write_outputs(
    dir: &Path,
    config: &ScenarioConfig,
    result: &ExperimentResult,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &result.tables {
        let path = dir.join(format!("{}.csv", table.method));
        write_table(&path, table)?;
        written.push(path);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        core_version: gcilsm_core::VERSION,
        seed: config.seed,
        mc_runs: config.mc_runs,
        files: written
            .iter()
            .filter_map(|p| p.file_name())
            .map(|f| f.to_string_lossy().into_owned())
            .collect(),
        config,
    };
    let path = dir.join("manifest.json");
    fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    written.push(path);
    Ok(written)
}
