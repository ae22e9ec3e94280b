//! JSON inventory of a run's outputs with SHA-256 checksums.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: String,
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, config: String, started_unix: f64) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            started_unix,
            wall_seconds: 0.0,
            files: Vec::new(),
        }
    }

    /// Records `file`, which must live under `dir`.
    pub fn add_file(&mut self, dir: &Path, file: &Path) -> Result<()> {
        let (bytes, sha256) = sha256_file(file)?;
        let rel: PathBuf = file.strip_prefix(dir).unwrap_or(file).to_path_buf();
        self.files.push(FileEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            bytes,
            sha256,
        });
        Ok(())
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        self.wall_seconds = (unix_now() - self.started_unix).max(0.0);
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::CorruptPayload(format!("manifest: {e}")))
    }

    /// Files whose size or checksum no longer match, relative to `dir`.
    pub fn stale_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match sha256_file(&dir.join(&f.path)) {
                Ok((bytes, sum)) => bytes != f.bytes || sum != f.sha256,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }
}
