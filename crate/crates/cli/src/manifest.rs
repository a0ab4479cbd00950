use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Passing the manifest back as
/// `--config` replays the resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub software_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputDigest>,
    /// Headline numbers (diffusivity, counts); not used on replay.
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn digest(&self, path: &str) -> Option<&str> {
        self.outputs
            .iter()
            .find(|o| o.path == path)
            .map(|o| o.sha256.as_str())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects outputs for one run and writes the manifest last.
pub struct Recorder {
    out: PathBuf,
    command: String,
    config: serde_json::Value,
    seed: Option<u64>,
    started_at: String,
    outputs: Vec<OutputDigest>,
}

impl Recorder {
    pub fn start<C: Serialize>(
        out: &Path,
        command: &str,
        config: &C,
        seed: Option<u64>,
    ) -> CliResult<Self> {
        std::fs::create_dir_all(out).map_err(CliError::io(out))?;
        let config = serde_json::to_value(config)
            .map_err(|e| CliError::Config(format!("config serialization: {e}")))?;
        Ok(Self {
            out: out.to_path_buf(),
            command: command.to_string(),
            config,
            seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            outputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Writes `bytes` to `out/name`, creating parent directories.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        std::fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.outputs.push(OutputDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Renders with `f` into memory, then writes as [`Recorder::write`].
    pub fn write_with<F>(&mut self, name: &str, f: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> tlsdiff::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn finish(self, summary: serde_json::Value) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            seed: self.seed,
            software_version: tlsdiff::VERSION.to_string(),
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: self.outputs,
            summary,
        };
        let path = self.out.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}
