//! Run manifests: what went in, what came out, and how to reproduce it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub seed: u64,
    /// SHA-256 of the resolved configuration serialized as JSON.
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
    pub wall_time_seconds: f64,
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    command: String,
    config: RunConfig,
    started: Instant,
    inputs: BTreeMap<String, FileDigest>,
    outputs: BTreeMap<String, FileDigest>,
}

pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes())
}

impl Recorder {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Recorder {
            command: command.to_string(),
            config: config.clone(),
            started: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Reads a whole input file, recording its digest under `role`.
    pub fn read_input(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.note_input(role, path, &bytes);
        Ok(bytes)
    }

    pub fn note_input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.insert(
            role.to_string(),
            FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 },
        );
    }

    /// Hashes a file that a parser already consumed.
    pub fn hash_input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.read_input(role, path).map(|_| ())
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.output_path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.insert(
            name.to_string(),
            FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 },
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        self.write_output(name, text.as_bytes())
    }

    /// Writes `{command}_manifest.json` next to the outputs.
    pub fn finish(self) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            command: self.command.clone(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.config.seed,
            config_hash: config_hash(&self.config),
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = manifest.config.output_dir.join(format!("{}_manifest.json", self.command));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))? + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
