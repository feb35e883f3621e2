//! Output artifacts. Every JSON document carries the resolved config and a
//! single `generated_at` timestamp field.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct Envelope<'a, T> {
    generated_at: String,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: &'a T,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    file: &str,
    command: &str,
    seed: u64,
    config: &RunConfig,
    result: &T,
) -> Result<PathBuf> {
    let envelope = Envelope {
        generated_at: chrono::Utc::now().to_rfc3339(),
        command,
        seed,
        config,
        result,
    };
    let path = dir.join(file);
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
