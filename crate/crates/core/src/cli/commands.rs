use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::manifest::Recorder;
use super::CliError;
use crate::convert::{build_ambinli, BuildReport, ConversionConfig, TargetMode};
use crate::eval::{self, histogram_csv, prediction_diff_report, BinReport};
use crate::ingest::canonical::to_canonical_string;
use crate::ingest::{parse_reader, Corpus, IngestError, InputFormat, LineError, ParseOptions, Parsed};
use crate::model::io::{self as model_io, model_hash};
use crate::model::{predict, ClassifierModel, EpochRecord, Prediction, Trainer};
use crate::transfer::{read_task_csv, run_trials, TaskSplits};

const MAX_REPORTED_ERRORS: usize = 20;

#[derive(Debug, Serialize)]
struct InputSummary {
    role: String,
    path: String,
    lines: usize,
    records: usize,
    malformed: usize,
    first_errors: Vec<LineError>,
}

fn load(cfg: &RunConfig, rec: &mut Recorder, role: &str, path: &Path, format: InputFormat) -> Result<(Parsed, InputSummary), CliError> {
    let bytes = rec.read_input(role, path)?;
    let display = path.display().to_string();
    let opts = ParseOptions {
        corpus_name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| role.to_string()),
        origin: display.clone(),
        max_malformed_fraction: cfg.max_malformed_fraction,
    };
    let parsed = parse_reader(bytes.as_slice(), format, &cfg.columns, &opts)
        .map_err(|e| IngestError::File { path: display.clone(), source: Box::new(e) })?;
    let summary = InputSummary {
        role: role.to_string(),
        path: display,
        lines: parsed.lines,
        records: parsed.corpus.len(),
        malformed: parsed.malformed.len(),
        first_errors: parsed.malformed.iter().take(MAX_REPORTED_ERRORS).cloned().collect(),
    };
    Ok((parsed, summary))
}

fn load_corpus(cfg: &RunConfig, rec: &mut Recorder, role: &str, path: &Path, format: InputFormat) -> Result<Corpus, CliError> {
    Ok(load(cfg, rec, role, path, format)?.0.corpus)
}

fn load_model(rec: &mut Recorder, role: &str, path: &Path) -> Result<ClassifierModel, CliError> {
    let bytes = rec.read_input(role, path)?;
    model_io::from_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn require<'a, T>(value: &'a Option<T>, key: &str, command: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Usage(format!("{command} needs inputs.{key} in the config")))
}

#[derive(Debug, Serialize)]
struct BuildSummary<'a> {
    total: usize,
    report: &'a BuildReport,
    inputs: Vec<InputSummary>,
    holdouts: Vec<InputSummary>,
    conversion: &'a ConversionConfig,
}

pub fn build(cfg: &RunConfig, rec: &mut Recorder) -> Result<String, CliError> {
    let i = &cfg.inputs;
    let mut sources = Vec::new();
    let mut inputs = Vec::new();
    for (role, path, format) in [("snli", &i.snli, InputFormat::Snli), ("mnli", &i.mnli, InputFormat::Mnli), ("unli", &i.unli, InputFormat::Unli)] {
        if let Some(path) = path {
            let (parsed, summary) = load(cfg, rec, role, path, format)?;
            sources.push(parsed.corpus);
            inputs.push(summary);
        }
    }
    if sources.is_empty() {
        return Err(CliError::Usage("build needs at least one of inputs.snli, inputs.mnli, inputs.unli".into()));
    }
    let mut holdouts = Vec::new();
    let mut holdout_summaries = Vec::new();
    for (n, path) in i.holdouts.iter().enumerate() {
        let (parsed, summary) = load(cfg, rec, &format!("holdout{n}"), path, InputFormat::Chaos)?;
        holdouts.push(parsed.corpus);
        holdout_summaries.push(summary);
    }
    let outcome = build_ambinli(&sources, &holdouts, &cfg.convert)?;
    rec.write_output("corpus.jsonl", to_canonical_string(&outcome.corpus).as_bytes())?;
    let summary = BuildSummary {
        total: outcome.report.total,
        report: &outcome.report,
        inputs,
        holdouts: holdout_summaries,
        conversion: &cfg.convert,
    };
    rec.write_json("build_report.json", &summary)?;

    let mut text = String::from("source   input  excluded  dedup  filtered  no-majority  output\n");
    for (source, t) in &outcome.report.per_source {
        text.push_str(&format!(
            "{:<7} {:>6}  {:>8}  {:>5}  {:>8}  {:>11}  {:>6}\n",
            source.name(),
            t.input,
            t.excluded_source,
            t.dedup_removed,
            t.filter_removed,
            t.no_majority_removed,
            t.output
        ));
    }
    text.push_str(&format!("total   {:>6}\n", outcome.report.total));
    for s in summary.inputs.iter().chain(&summary.holdouts).filter(|s| s.malformed > 0) {
        text.push_str(&format!("{}: {} malformed line(s) skipped\n", s.path, s.malformed));
    }
    rec.write_output("build_report.txt", text.as_bytes())?;
    Ok(text)
}

#[derive(Debug, Serialize)]
struct TrainSummary<'a> {
    examples: usize,
    pretrain_examples: Option<usize>,
    target_mode: TargetMode,
    epochs: usize,
    pretrain_epochs: usize,
    model_sha256: String,
    hash_dim: usize,
    hidden: usize,
    final_train: Option<&'a EpochRecord>,
    final_dev: Option<&'a EpochRecord>,
}

pub fn train(cfg: &RunConfig, rec: &mut Recorder) -> Result<String, CliError> {
    let i = &cfg.inputs;
    let corpus = load_corpus(cfg, rec, "corpus", &cfg.corpus_path(), i.corpus_format)?;
    let pretrain = i.pretrain.as_ref().map(|p| load_corpus(cfg, rec, "pretrain", p, i.pretrain_format)).transpose()?;
    let dev = i.dev.as_ref().map(|p| load_corpus(cfg, rec, "dev", p, i.dev_format)).transpose()?;
    let mut trainer = match &i.init_model {
        Some(path) => Trainer::from_model(cfg.train.clone(), load_model(rec, "init_model", path)?)?,
        None => Trainer::new(cfg.train.clone())?,
    };
    match &pretrain {
        Some(p) => trainer.two_phase(p, &corpus, dev.as_ref())?,
        None => trainer.run_phase("train", &corpus, dev.as_ref(), cfg.train.target_mode, cfg.train.epochs)?,
    }
    let out = trainer.finish();
    rec.write_output("model.bin", &model_io::to_bytes(&out.model))?;
    let mut csv = Vec::new();
    out.write_history_csv(&mut csv)?;
    rec.write_output("history.csv", &csv)?;
    let last = |split: &str| out.history.iter().rev().find(|r| r.split == split);
    let summary = TrainSummary {
        examples: corpus.len(),
        pretrain_examples: pretrain.as_ref().map(Corpus::len),
        target_mode: cfg.train.target_mode,
        epochs: cfg.train.epochs,
        pretrain_epochs: if pretrain.is_some() { cfg.train.pretrain_epochs } else { 0 },
        model_sha256: model_hash(&out.model),
        hash_dim: out.model.hash_dim(),
        hidden: out.model.hidden,
        final_train: last("train"),
        final_dev: last("dev"),
    };
    rec.write_json("train_report.json", &summary)?;
    let mut text = format!("trained on {} examples ({} targets)\n", corpus.len(), cfg.train.target_mode.name());
    if let Some(r) = summary.final_train {
        text.push_str(&format!("final train loss {:.4} accuracy {:.4}\n", r.loss, r.accuracy));
    }
    if let Some(r) = summary.final_dev {
        text.push_str(&format!("final dev loss {:.4} accuracy {:.4}\n", r.loss, r.accuracy));
    }
    text.push_str(&format!("model sha256 {}\n", summary.model_sha256));
    Ok(text)
}

fn predictions_jsonl(preds: &[Prediction]) -> String {
    preds.iter().map(|p| serde_json::to_string(p).expect("prediction serializes") + "\n").collect()
}

fn read_predictions(rec: &mut Recorder, path: &Path) -> Result<Vec<Prediction>, CliError> {
    let bytes = rec.read_input("predictions", path)?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn score(cfg: &RunConfig, rec: &mut Recorder, command: &str) -> Result<(Corpus, Vec<Prediction>, eval::EvalReport), CliError> {
    let path = require(&cfg.inputs.eval_targets, "eval_targets", command)?;
    let targets = load_corpus(cfg, rec, "eval_targets", path, cfg.inputs.eval_format)?;
    let preds = match &cfg.inputs.predictions {
        Some(path) => read_predictions(rec, path)?,
        None => predict(&load_model(rec, "model", &cfg.model_path())?, &targets)?,
    };
    let report = eval::evaluate(&preds, &targets, &cfg.eval.bin_edges)?;
    Ok((targets, preds, report))
}

pub fn eval(cfg: &RunConfig, rec: &mut Recorder) -> Result<String, CliError> {
    let (targets, preds, report) = score(cfg, rec, "eval")?;
    rec.write_output("predictions.jsonl", predictions_jsonl(&preds).as_bytes())?;
    rec.write_json("eval_report.json", &report)?;
    let mut text = report.to_text();
    rec.write_output("eval_report.txt", text.as_bytes())?;
    if let Some(path) = &cfg.inputs.compare_model {
        let other = load_model(rec, "compare_model", path)?;
        let other_preds = predict(&other, &targets)?;
        let diff = prediction_diff_report("model", &preds, "compare", &other_preds, &targets)?;
        rec.write_json("diff_report.json", &diff)?;
        rec.write_output("diff_report.txt", diff.to_text().as_bytes())?;
        rec.write_output("hist_only_model.csv", histogram_csv(&diff.only_a_correct).as_bytes())?;
        rec.write_output("hist_only_compare.csv", histogram_csv(&diff.only_b_correct).as_bytes())?;
        rec.write_output("hist_targets.csv", histogram_csv(&diff.targets).as_bytes())?;
        text.push('\n');
        text.push_str(&diff.to_text());
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct BinsSummary<'a> {
    dataset: &'a str,
    n_examples: usize,
    bins: &'a BinReport,
}

pub fn bins(cfg: &RunConfig, rec: &mut Recorder) -> Result<String, CliError> {
    let (_, _, report) = score(cfg, rec, "bins")?;
    let summary = BinsSummary { dataset: &report.dataset, n_examples: report.n_examples, bins: &report.entropy_bins };
    rec.write_json("bins_report.json", &summary)?;
    let text = report.entropy_bins.to_text();
    rec.write_output("bins_report.txt", text.as_bytes())?;
    Ok(text)
}

pub fn crossval(cfg: &RunConfig, rec: &mut Recorder) -> Result<String, CliError> {
    let corpus = load_corpus(cfg, rec, "corpus", &cfg.corpus_path(), cfg.inputs.corpus_format)?;
    let base = cfg.inputs.init_model.as_ref().map(|p| load_model(rec, "init_model", p)).transpose()?;
    let modes = [TargetMode::Ambiguity, TargetMode::GoldOneHot];
    let report = eval::crossval(&corpus, &cfg.train, cfg.eval.folds, &modes, base.as_ref())?;
    let split = eval::kfold_split(&corpus, cfg.eval.folds, cfg.train.seed)?;
    let mut folds = String::from("uid,fold\n");
    for (ex, f) in corpus.iter().zip(&split.folds) {
        folds.push_str(&format!("{},{}\n", ex.uid, f));
    }
    rec.write_output("fold_assignments.csv", folds.as_bytes())?;
    rec.write_json("crossval_report.json", &report)?;
    let text = report.to_text();
    rec.write_output("crossval_report.txt", text.as_bytes())?;
    Ok(text)
}

pub fn transfer(cfg: &RunConfig, rec: &mut Recorder) -> Result<String, CliError> {
    let i = &cfg.inputs;
    let kind = cfg.transfer.task;
    let mut read = |role: &str, path: &Path| -> Result<_, CliError> {
        let bytes = rec.read_input(role, path)?;
        read_task_csv(bytes.as_slice(), kind).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    };
    let splits = match (&i.task, &i.task_train, &i.task_dev, &i.task_test) {
        (Some(path), None, None, None) => TaskSplits::from_fractions(&read("task", path)?, cfg.transfer.split, cfg.seed)?,
        (None, Some(train), Some(dev), Some(test)) => {
            TaskSplits { train: read("task_train", train)?, dev: read("task_dev", dev)?, test: read("task_test", test)? }
        }
        _ => {
            return Err(CliError::Usage(
                "transfer needs either inputs.task or all of inputs.task_train, task_dev, task_test".into(),
            ))
        }
    };
    if i.encoders.is_empty() {
        return Err(CliError::Usage("transfer needs at least one entry under [inputs.encoders]".into()));
    }
    let mut models = Vec::new();
    for (name, path) in &i.encoders {
        models.push((name.clone(), load_model(rec, &format!("encoder:{name}"), path)?));
    }
    let encoders: Vec<(&str, &ClassifierModel)> = models.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let table = run_trials(&cfg.transfer, &splits, &encoders)?;
    rec.write_output("transfer_table.csv", table.to_csv().as_bytes())?;
    rec.write_json("transfer_table.json", &table)?;
    let text = table.to_text();
    rec.write_output("transfer_table.txt", text.as_bytes())?;
    Ok(text)
}
