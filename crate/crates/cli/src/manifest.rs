use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub started_at: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct Run {
    command: String,
    config: serde_json::Value,
    started_at: String,
    clock: Instant,
}

impl Run {
    pub fn start(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            started_at: chrono::Utc::now().to_rfc3339(),
            clock: Instant::now(),
        }
    }

    /// Digests `outputs` and writes `<stem>.manifest.json` into `dir`.
    pub fn finish(self, dir: &Path, stem: &str, outputs: &[PathBuf]) -> Result<PathBuf> {
        let mut digests = Vec::new();
        for p in outputs {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            digests.push(OutputDigest { path: name, sha256: sha256_file(p)? });
        }
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at,
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            outputs: digests,
        };
        let path = dir.join(format!("{stem}.manifest.json"));
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
