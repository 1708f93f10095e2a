use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

/// Files produced by one run, held in memory and written together at the end.
pub struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<(String, Vec<u8>)>,
    started: Instant,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    seed: u64,
    version: &'a str,
    wall_time_secs: f64,
    outputs: Vec<String>,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Outputs { dir, files: Vec::new(), started: Instant::now() }
    }

    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn add_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    /// Writes every file plus `manifest.json`, each atomically. Without an
    /// output directory nothing touches the disk.
    pub fn finish(self, command: &str, config: &impl Serialize, seed: u64) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut outputs = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            write_atomic(&path, contents)?;
            outputs.push(path.display().to_string());
        }
        let manifest = Manifest {
            command,
            config: serde_json::to_value(config)?,
            seed,
            version: otdepth::VERSION,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&dir.join("manifest.json"), text.as_bytes())
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(contents)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
