//! Frozen-encoder transfer: hidden activations of a trained classifier feed
//! freshly trained task heads.

mod head;
mod stats;
mod task;

use serde::{Deserialize, Serialize};

pub use head::{train_head, Dense, EarlyStopping, Head, HeadConfig, HeadOutcome, StopDecision};
pub use stats::{mean_std, mse, pearson};
pub use task::{check_target, read_task_csv, write_task_csv, TaskItem, TaskSplits};

use crate::model::io::model_hash;
use crate::model::{ClassifierModel, Featurizer, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Scores in [0, 1], sigmoid output, squared-error loss.
    Regression01,
    /// Labels in {0, 1}, two-way softmax, cross-entropy loss.
    BinaryClassification,
}

impl TaskKind {
    pub fn outputs(self) -> usize {
        match self {
            TaskKind::Regression01 => 1,
            TaskKind::BinaryClassification => 2,
        }
    }

    pub fn metric_names(self) -> [&'static str; 2] {
        match self {
            TaskKind::Regression01 => ["pearson", "mse"],
            TaskKind::BinaryClassification => ["accuracy", "loss"],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransferError {
    #[error("no data")]
    EmptyData,
    #[error("item '{uid}' has target {value}, not valid for {kind:?}")]
    LabelTypeMismatch { uid: String, value: f64, kind: TaskKind },
    #[error("zero variance: correlation undefined")]
    DegenerateVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid transfer configuration: {0}")]
    InvalidConfig(String),
    #[error("encoder changed during transfer ({before} -> {after})")]
    EncoderModified { before: String, after: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub task: TaskKind,
    /// Head depths to compare, each 1 or 2.
    pub head_layers: Vec<usize>,
    /// Train, dev, test fractions used when the task has no provided splits.
    pub split: [f64; 3],
    pub trials: usize,
    pub base_seed: u64,
    pub head: HeadConfig,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            task: TaskKind::Regression01,
            head_layers: vec![1, 2],
            split: [0.8, 0.1, 0.1],
            trials: 5,
            base_seed: 0,
            head: HeadConfig::default(),
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<(), TransferError> {
        if self.trials == 0 {
            return Err(TransferError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.head_layers.is_empty() || self.head_layers.iter().any(|&d| d != 1 && d != 2) {
            return Err(TransferError::InvalidConfig(format!("head_layers must list depths 1 or 2, got {:?}", self.head_layers)));
        }
        let sum: f64 = self.split.iter().sum();
        if self.split.iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
            return Err(TransferError::InvalidConfig(format!("split fractions must sum to 1, got {:?}", self.split)));
        }
        Ok(())
    }
}

/// Post-ELU hidden activations per item. The encoder is only read.
pub fn encode(model: &ClassifierModel, items: &[TaskItem]) -> Result<Vec<Vec<f64>>, TransferError> {
    let featurizer = Featurizer::new(model.features.clone())?;
    items
        .iter()
        .map(|item| {
            let x = match &item.text_pair {
                Some(pair) => featurizer.featurize(&item.text, pair),
                None => featurizer.featurize_single(&item.text),
            }
            .map_err(|e| ModelError::Example { uid: item.uid.clone(), source: Box::new(e) })?;
            Ok(model.hidden_representation(&x)?)
        })
        .collect()
}

/// Test-set metrics of a trained head, named by [`TaskKind::metric_names`].
pub fn score_head(head: &Head, xs: &[Vec<f64>], ys: &[f64]) -> Result<[f64; 2], TransferError> {
    let preds: Vec<f64> = xs.iter().map(|x| head.predict(x)).collect();
    match head.kind {
        TaskKind::Regression01 => Ok([pearson(&preds, ys)?, mse(&preds, ys)?]),
        TaskKind::BinaryClassification => {
            let correct = preds.iter().zip(ys).filter(|(p, &y)| (**p > 0.5) == (y == 1.0)).count();
            Ok([correct as f64 / ys.len() as f64, head.mean_loss(xs, ys)])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub name: String,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 when there is a single trial.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferRow {
    pub encoder: String,
    pub encoder_hash: String,
    pub head_layers: usize,
    pub metrics: Vec<MetricSummary>,
    /// Epochs run per trial.
    pub epochs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferTable {
    pub task: TaskKind,
    pub trials: usize,
    pub base_seed: u64,
    /// Set when `trials == 1`, so the zero deviations are not informative.
    pub single_trial: bool,
    pub rows: Vec<TransferRow>,
}

impl TransferTable {
    pub fn row(&self, encoder: &str, head_layers: usize) -> Option<&TransferRow> {
        self.rows.iter().find(|r| r.encoder == encoder && r.head_layers == head_layers)
    }

    /// `encoder,head_layers,metric,mean,std,trials` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("encoder,head_layers,metric,mean,std,trials\n");
        for r in &self.rows {
            for m in &r.metrics {
                out.push_str(&format!("{},{},{},{},{},{}\n", r.encoder, r.head_layers, m.name, m.mean, m.std, self.trials));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let names = self.task.metric_names();
        let mut out = format!("{:<16} {:>6}", "encoder", "layers");
        for n in names {
            out.push_str(&format!("  {:>20}", n));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<16} {:>6}", r.encoder, r.head_layers));
            for m in &r.metrics {
                out.push_str(&format!("  {:>11.4} ± {:<6.4}", m.mean, m.std));
            }
            out.push('\n');
        }
        if self.single_trial {
            out.push_str("(single trial: standard deviations are 0 by convention)\n");
        }
        out
    }
}

/// Trains `trials` heads per encoder and depth, trial `i` seeded `base_seed + i`.
///
/// Every encoder sees the same splits and the same head seeds. Encoders are
/// hashed before and after; any change is an error.
pub fn run_trials(
    cfg: &TransferConfig,
    splits: &TaskSplits,
    encoders: &[(&str, &ClassifierModel)],
) -> Result<TransferTable, TransferError> {
    cfg.validate()?;
    splits.check()?;
    let targets = |items: &[TaskItem]| -> Result<Vec<f64>, TransferError> {
        items.iter().map(|i| check_target(cfg.task, &i.uid, i.target).map(|_| i.target)).collect()
    };
    let (y_train, y_dev, y_test) = (targets(&splits.train)?, targets(&splits.dev)?, targets(&splits.test)?);
    let mut rows = Vec::new();
    for &(name, model) in encoders {
        let before = model_hash(model);
        let x_train = encode(model, &splits.train)?;
        let x_dev = encode(model, &splits.dev)?;
        let x_test = encode(model, &splits.test)?;
        for &depth in &cfg.head_layers {
            let head_cfg = HeadConfig { depth, ..cfg.head.clone() };
            let results = std::thread::scope(|scope| {
                let handles: Vec<_> = (0..cfg.trials)
                    .map(|trial| {
                        let (x_train, x_dev, x_test, head_cfg) = (&x_train, &x_dev, &x_test, &head_cfg);
                        let (y_train, y_dev, y_test) = (&y_train, &y_dev, &y_test);
                        scope.spawn(move || -> Result<([f64; 2], usize), TransferError> {
                            let seed = cfg.base_seed + trial as u64;
                            let out = train_head((x_train, y_train), (x_dev, y_dev), cfg.task, head_cfg, seed)?;
                            Ok((score_head(&out.head, x_test, y_test)?, out.dev_curve.len()))
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("trial thread panicked")).collect::<Result<Vec<_>, _>>()
            })?;
            let metrics = cfg
                .task
                .metric_names()
                .iter()
                .enumerate()
                .map(|(m, name)| {
                    let values: Vec<f64> = results.iter().map(|(s, _)| s[m]).collect();
                    let (mean, std) = mean_std(&values);
                    MetricSummary { name: name.to_string(), values, mean, std }
                })
                .collect();
            rows.push(TransferRow {
                encoder: name.to_string(),
                encoder_hash: before.clone(),
                head_layers: depth,
                metrics,
                epochs: results.iter().map(|(_, e)| *e).collect(),
            });
        }
        let after = model_hash(model);
        if before != after {
            return Err(TransferError::EncoderModified { before, after });
        }
    }
    Ok(TransferTable { task: cfg.task, trials: cfg.trials, base_seed: cfg.base_seed, single_trial: cfg.trials == 1, rows })
}
