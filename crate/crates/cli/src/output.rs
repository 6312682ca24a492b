//! Output plumbing: atomic file writes, CSV formatting at a fixed precision,
//! and the run manifest.

use anyhow::Context;
use serde::Serialize;
use std::path::Path;

/// Floats in CSV output carry 9 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0.0".into();
    }
    format!("{v:.8e}")
}

/// Writes via a temp file in the same directory plus rename, so an
/// interrupted run never leaves a partial file at the final path.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)
        .with_context(|| format!("writing temp file {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into place: {}", path.display()))?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> anyhow::Result<()> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 2);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Everything needed to reproduce a run bit-exactly.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub base_seed: u64,
    pub workers: usize,
    pub config: &'a C,
    pub task_seeds: Vec<TaskSeed>,
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct TaskSeed {
    pub task: String,
    pub seed: u64,
}
