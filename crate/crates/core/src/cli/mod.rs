//! Config-driven commands behind the `ambinli` binary.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 file system
//! error, 3 invalid data.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{InputPaths, RunConfig};
pub use manifest::{Manifest, Recorder};

use crate::convert::ConvertError;
use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::model::ModelError;
use crate::transfer::TransferError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::File { path, source } => match *source {
                IngestError::Io(io) => CliError::Io { path, source: io },
                inner => CliError::Data(format!("{path}: {inner}")),
            },
            IngestError::Io(io) => CliError::Io { path: String::new(), source: io },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io(io) => CliError::Io { path: String::new(), source: io },
            ModelError::InvalidConfig(m) => CliError::Usage(format!("invalid config: {m}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ConvertError> for CliError {
    fn from(e: ConvertError) -> Self {
        match e {
            ConvertError::Ingest(inner) => inner.into(),
            ConvertError::InvalidConfig(m) => CliError::Usage(format!("invalid config: {m}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(inner) => inner.into(),
            EvalError::BadEdges(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TransferError> for CliError {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::Model(inner) => inner.into(),
            TransferError::Io(io) => CliError::Io { path: String::new(), source: io },
            TransferError::InvalidConfig(m) => CliError::Usage(format!("invalid config: {m}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ambinli", version, about = "Ambiguity-distribution NLI: build corpora, train, evaluate, transfer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Override a config key, e.g. `--set train.epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge SNLI/MNLI/UNLI inputs into a canonical training corpus.
    Build(RunArgs),
    /// Train a classifier, optionally after gold-label pretraining.
    Train(RunArgs),
    /// Score a model against evaluation targets (JSD, KL, accuracy, entropy bins).
    Eval(RunArgs),
    /// Per-entropy-range metrics only.
    Bins(RunArgs),
    /// k-fold cross-validation comparing ambiguity and gold targets.
    Crossval(RunArgs),
    /// Train task heads on frozen encoders over several seeds.
    Transfer(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Build(_) => "build",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Bins(_) => "bins",
            Command::Crossval(_) => "crossval",
            Command::Transfer(_) => "transfer",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Build(a)
            | Command::Train(a)
            | Command::Eval(a)
            | Command::Bins(a)
            | Command::Crossval(a)
            | Command::Transfer(a) => a,
        }
    }
}

/// Runs one command and returns its text summary.
pub fn execute(command: &Command) -> Result<String, CliError> {
    let args = command.args();
    let cfg = RunConfig::load(&args.config, &args.overrides)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let mut rec = Recorder::new(command.name(), &cfg);
    rec.hash_input("config", &args.config)?;
    let text = match command {
        Command::Build(_) => commands::build(&cfg, &mut rec)?,
        Command::Train(_) => commands::train(&cfg, &mut rec)?,
        Command::Eval(_) => commands::eval(&cfg, &mut rec)?,
        Command::Bins(_) => commands::bins(&cfg, &mut rec)?,
        Command::Crossval(_) => commands::crossval(&cfg, &mut rec)?,
        Command::Transfer(_) => commands::transfer(&cfg, &mut rec)?,
    };
    rec.finish()?;
    Ok(text)
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
