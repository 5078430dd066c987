//! Run configuration: one TOML file plus `--set key=value` overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::convert::ConversionConfig;
use crate::eval::{validate_edges, EvalConfig};
use crate::ingest::{ColumnConfig, InputFormat};
use crate::model::TrainConfig;
use crate::transfer::TransferConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub snli: Option<PathBuf>,
    pub mnli: Option<PathBuf>,
    pub unli: Option<PathBuf>,
    /// ChaosNLI-format files removed from the build by dedup.
    pub holdouts: Vec<PathBuf>,
    /// Training corpus; defaults to `corpus.jsonl` in the output directory.
    pub corpus: Option<PathBuf>,
    pub corpus_format: InputFormat,
    /// Gold-label pretraining corpus; enables the two-phase schedule.
    pub pretrain: Option<PathBuf>,
    pub pretrain_format: InputFormat,
    pub dev: Option<PathBuf>,
    pub dev_format: InputFormat,
    /// Model to continue training from instead of a fresh initialization.
    pub init_model: Option<PathBuf>,
    /// Model to evaluate; defaults to `model.bin` in the output directory.
    pub model: Option<PathBuf>,
    /// Predictions JSON lines to score instead of running `model`.
    pub predictions: Option<PathBuf>,
    pub eval_targets: Option<PathBuf>,
    pub eval_format: InputFormat,
    /// Second model for the prediction comparison written by `eval`.
    pub compare_model: Option<PathBuf>,
    /// Downstream task CSV, split by `transfer.split`.
    pub task: Option<PathBuf>,
    pub task_train: Option<PathBuf>,
    pub task_dev: Option<PathBuf>,
    pub task_test: Option<PathBuf>,
    /// Frozen encoders for `transfer`, by display name.
    pub encoders: BTreeMap<String, PathBuf>,
}

impl Default for InputPaths {
    fn default() -> Self {
        InputPaths {
            snli: None,
            mnli: None,
            unli: None,
            holdouts: Vec::new(),
            corpus: None,
            corpus_format: InputFormat::Canonical,
            pretrain: None,
            pretrain_format: InputFormat::Canonical,
            dev: None,
            dev_format: InputFormat::Canonical,
            init_model: None,
            model: None,
            predictions: None,
            eval_targets: None,
            eval_format: InputFormat::Chaos,
            compare_model: None,
            task: None,
            task_train: None,
            task_dev: None,
            task_test: None,
            encoders: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// The only seed; every random stream is derived from it and a purpose string.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub max_malformed_fraction: f64,
    pub inputs: InputPaths,
    pub columns: ColumnConfig,
    pub convert: ConversionConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub transfer: TransferConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            max_malformed_fraction: 0.001,
            inputs: InputPaths::default(),
            columns: ColumnConfig::default(),
            convert: ConversionConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            transfer: TransferConfig::default(),
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {value}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies `a.b.c=value` to a TOML table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{assignment}'")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("bad override key '{key}'")));
    }
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut current = table;
    for part in parents {
        let entry = current.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("override '{key}': '{part}' is not a table")))?;
    }
    current.insert(last.to_string(), override_value(value.trim()));
    Ok(())
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl RunConfig {
    /// Reads the file, applies overrides, and resolves relative paths
    /// against the config file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        for assignment in overrides {
            apply_override(&mut table, assignment)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        cfg.sync_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output_dir);
        let i = &mut self.inputs;
        for p in [
            &mut i.snli,
            &mut i.mnli,
            &mut i.unli,
            &mut i.corpus,
            &mut i.pretrain,
            &mut i.dev,
            &mut i.init_model,
            &mut i.model,
            &mut i.predictions,
            &mut i.eval_targets,
            &mut i.compare_model,
            &mut i.task,
            &mut i.task_train,
            &mut i.task_dev,
            &mut i.task_test,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        for p in i.holdouts.iter_mut().chain(i.encoders.values_mut()) {
            resolve(base, p);
        }
    }

    /// Copies the global seed into the sections that carry their own.
    pub fn sync_seeds(&mut self) {
        self.train.seed = self.seed;
        self.transfer.base_seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: &dyn std::fmt::Display| CliError::Usage(format!("invalid config: {e}"));
        self.convert.validate().map_err(|e| usage(&e))?;
        self.train.validate().map_err(|e| usage(&e))?;
        self.transfer.validate().map_err(|e| usage(&e))?;
        validate_edges(&self.eval.bin_edges).map_err(|e| usage(&e))?;
        if self.eval.folds < 2 {
            return Err(CliError::Usage("invalid config: eval.folds must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.max_malformed_fraction) {
            return Err(CliError::Usage("invalid config: max_malformed_fraction must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.inputs.corpus.clone().unwrap_or_else(|| self.output_dir.join("corpus.jsonl"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.inputs.model.clone().unwrap_or_else(|| self.output_dir.join("model.bin"))
    }
}
