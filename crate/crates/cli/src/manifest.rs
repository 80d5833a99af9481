use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use acnn_core::model::write_atomic;
use acnn_core::rng::RNG_ALGORITHM;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Working directory the command ran in; relative paths resolve against it.
    pub cwd: PathBuf,
    pub version: String,
    /// Every setting the command ran with, defaults included.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub rng_algorithm: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub timings: Vec<(String, f64)>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| acnn_core::Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn record(path: &Path) -> Result<FileRecord, CliError> {
    Ok(FileRecord {
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
    })
}

/// Collects what a command did; finished with [`Recorder::write`].
pub struct Recorder {
    started: Instant,
    manifest: RunManifest,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                argv: std::env::args().collect(),
                cwd: std::env::current_dir().unwrap_or_default(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: serde_json::Value::Null,
                seed: None,
                rng_algorithm: RNG_ALGORITHM.to_string(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                timings: Vec::new(),
            },
        }
    }

    pub fn config(&mut self, config: impl Serialize) -> &mut Self {
        self.manifest.config = serde_json::to_value(config).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.manifest.inputs.push(record(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.manifest.outputs.push(record(path)?);
        Ok(self)
    }

    pub fn timing(&mut self, label: &str, seconds: f64) -> &mut Self {
        self.manifest.timings.push((label.to_string(), seconds));
        self
    }

    /// Writes the manifest to `explicit` or, failing that, `default`; does
    /// nothing when neither is given.
    pub fn write(mut self, explicit: Option<&Path>, default: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
        let Some(path) = explicit.or(default) else {
            return Ok(None);
        };
        let total = self.started.elapsed().as_secs_f64();
        self.manifest.timings.push(("total".into(), total));
        let json = serde_json::to_vec_pretty(&self.manifest)
            .map_err(|e| CliError::Usage(format!("manifest encode: {e}")))?;
        write_atomic(path, &json)?;
        Ok(Some(path.to_path_buf()))
    }
}

pub fn load(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| acnn_core::Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| acnn_core::Error::Parse(format!("{}: {e}", path.display())).into())
}
