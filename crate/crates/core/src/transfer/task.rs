use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{TaskKind, TransferError};
use crate::seed::rng_for;

/// One downstream example: a single text or a text pair with a numeric target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskItem {
    pub uid: String,
    pub text: String,
    pub text_pair: Option<String>,
    /// A score in [0, 1] for regression, 0 or 1 for classification.
    pub target: f64,
}

#[derive(Debug, Deserialize)]
struct Row {
    id: String,
    text: String,
    #[serde(default)]
    text_pair: Option<String>,
    #[serde(alias = "score", alias = "label")]
    target: f64,
}

pub fn check_target(kind: TaskKind, uid: &str, value: f64) -> Result<(), TransferError> {
    let ok = match kind {
        TaskKind::Regression01 => (0.0..=1.0).contains(&value),
        TaskKind::BinaryClassification => value == 0.0 || value == 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(TransferError::LabelTypeMismatch { uid: uid.to_string(), value, kind })
    }
}

/// Reads `id,text[,text_pair],score` (regression) or `id,text[,text_pair],label`
/// (classification) CSV with a header row.
pub fn read_task_csv<R: Read>(reader: R, kind: TaskKind) -> Result<Vec<TaskItem>, TransferError> {
    let mut items = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize::<Row>() {
        let row = row?;
        check_target(kind, &row.id, row.target)?;
        let text_pair = row.text_pair.filter(|t| !t.is_empty());
        items.push(TaskItem { uid: row.id, text: row.text, text_pair, target: row.target });
    }
    if items.is_empty() {
        return Err(TransferError::EmptyData);
    }
    Ok(items)
}

pub fn write_task_csv<W: Write>(items: &[TaskItem], kind: TaskKind, writer: W) -> Result<(), TransferError> {
    let mut out = csv::Writer::from_writer(writer);
    let target = match kind {
        TaskKind::Regression01 => "score",
        TaskKind::BinaryClassification => "label",
    };
    out.write_record(["id", "text", "text_pair", target])?;
    for item in items {
        out.write_record([&item.uid, &item.text, item.text_pair.as_deref().unwrap_or(""), &item.target.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSplits {
    pub train: Vec<TaskItem>,
    pub dev: Vec<TaskItem>,
    pub test: Vec<TaskItem>,
}

impl TaskSplits {
    /// Seeded shuffle, then consecutive slices sized by `fractions` (train, dev, test).
    /// The test split takes the remainder after rounding.
    pub fn from_fractions(items: &[TaskItem], fractions: [f64; 3], seed: u64) -> Result<Self, TransferError> {
        let sum: f64 = fractions.iter().sum();
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
            return Err(TransferError::InvalidConfig(format!("split fractions must be in [0, 1] and sum to 1, got {fractions:?}")));
        }
        let mut shuffled = items.to_vec();
        shuffled.shuffle(&mut rng_for(seed, "transfer/split"));
        let n = shuffled.len();
        let n_train = (fractions[0] * n as f64).round() as usize;
        let n_dev = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
        let test = shuffled.split_off(n_train + n_dev);
        let dev = shuffled.split_off(n_train);
        let splits = TaskSplits { train: shuffled, dev, test };
        splits.check()?;
        Ok(splits)
    }

    pub fn check(&self) -> Result<(), TransferError> {
        if self.train.is_empty() || self.dev.is_empty() || self.test.is_empty() {
            return Err(TransferError::EmptyData);
        }
        Ok(())
    }
}
