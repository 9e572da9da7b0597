use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// A CSV table held in memory until the single write at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}: row width", self.name);
        self.rows.push(row);
    }
}

/// Nine significant digits, fixed exponent form.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn int(x: impl std::fmt::Display) -> String {
    x.to_string()
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write_table(dir: &Path, t: &Table) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", t.name));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes every table, the config snapshot and the manifest.
pub fn write_all(dir: &Path, tables: &[Table], mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = Vec::new();
    for t in tables {
        written.push(write_table(dir, t)?);
    }
    let cfg_name = format!("{}.cfg", manifest.subcommand);
    let cfg_path = dir.join(&cfg_name);
    std::fs::write(&cfg_path, crate::config::render(&manifest.config))
        .with_context(|| format!("writing {}", cfg_path.display()))?;
    written.push(cfg_path);

    manifest.outputs = written.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    manifest.finished_unix_s = unix_now();
    let man_path = dir.join(format!("{}_manifest.json", manifest.subcommand));
    std::fs::write(&man_path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", man_path.display()))?;
    written.push(man_path);
    Ok(written)
}
