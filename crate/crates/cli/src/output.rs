//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::runtime(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::runtime(format!("cannot rename into {}: {e}", path.display())))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        }
    }
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config_paths: Vec<String>,
    pub seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
    pub duration_ms: u64,
}

/// Collects inputs and outputs of a run, then writes its manifest.
pub struct Run {
    started: Instant,
    manifest: RunManifest,
}

impl Run {
    pub fn start(command: &str, threads: Option<usize>) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                args: std::env::args().skip(1).collect(),
                config_paths: Vec::new(),
                seeds: Vec::new(),
                threads,
                inputs: Vec::new(),
                outputs: Vec::new(),
                details: Default::default(),
                duration_ms: 0,
            },
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> CliResult<String> {
        let text = read_to_string(path)?;
        self.manifest.inputs.push(FileDigest::of(path, text.as_bytes()));
        Ok(text)
    }

    pub fn config(&mut self, path: &Path) {
        self.manifest.config_paths.push(path.display().to_string());
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seeds.push(seed);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.manifest
            .details
            .insert(key.to_string(), serde_json::to_value(value).expect("serialisable"));
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_atomic(path, bytes)?;
        self.manifest.outputs.push(FileDigest::of(path, bytes));
        Ok(())
    }

    /// Writes `<command>.manifest.json` into `dir` and returns its path.
    pub fn finish(mut self, dir: &Path) -> CliResult<PathBuf> {
        self.manifest.duration_ms = self.started.elapsed().as_millis() as u64;
        let path = dir.join(format!("{}.manifest.json", self.manifest.command));
        write_atomic(&path, to_json(&self.manifest).as_bytes())?;
        Ok(path)
    }
}
