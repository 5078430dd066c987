//! Corpus-level divergence and accuracy, entropy bins, cross-validation and
//! prediction comparisons.

mod bins;
mod crossval;
mod diff;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use bins::{bin_index, entropy_bins, validate_edges, BinMetrics, BinReport, DEFAULT_BIN_EDGES};
pub use crossval::{crossval, kfold_split, CrossvalReport, FoldResult, FoldSplit, ModeScore};
pub use diff::{histogram_csv, prediction_diff_report, DiffRecord, DiffReport};

use crate::dist::{entropy, jsd, kl, GoldLabel, Label, LabelDistribution};
use crate::ingest::Corpus;
use crate::model::{ModelError, Prediction};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("prediction uids do not match targets: {missing} target(s) without prediction (e.g. {missing_example:?}), {extra} prediction(s) without target (e.g. {extra_example:?})")]
    UidMismatch {
        missing: usize,
        extra: usize,
        missing_example: Option<String>,
        extra_example: Option<String>,
    },
    #[error("duplicate prediction for uid '{0}'")]
    DuplicatePrediction(String),
    #[error("bin edges must be finite, strictly increasing, and at least two: {0:?}")]
    BadEdges(Vec<f64>),
    #[error("cannot split {size} examples into {k} folds")]
    TooSmall { size: usize, k: usize },
    #[error("example '{0}' has no target distribution")]
    MissingTarget(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bin_edges: Vec<f64>,
    pub folds: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { bin_edges: DEFAULT_BIN_EDGES.to_vec(), folds: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleRecord {
    pub uid: String,
    pub target: LabelDistribution,
    pub predicted: LabelDistribution,
    /// Label accuracy is measured against; `"-"` when the annotators tie.
    #[serde(serialize_with = "gold_name")]
    pub reference: GoldLabel,
    pub predicted_label: Label,
    /// `None` for tied references, which are excluded from accuracy.
    pub correct: Option<bool>,
    /// Entropy of the target distribution, bits.
    pub entropy: f64,
    pub jsd: f64,
    pub kl: f64,
}

pub(crate) fn gold_name<S: serde::Serializer>(g: &GoldLabel, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(g.name())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub n_examples: usize,
    pub mean_jsd: f64,
    /// Mean KL(target ‖ prediction), bits.
    pub mean_kl: f64,
    /// `n_correct / n_scored`; NaN (serialized as null) when nothing is scored.
    pub accuracy: f64,
    pub n_correct: usize,
    pub n_scored: usize,
    pub n_no_majority: usize,
    pub entropy_bins: BinReport,
    pub per_example: Vec<ExampleRecord>,
}

/// Sum that does not depend on the order of `values`.
pub(crate) fn order_free_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Index predictions by uid, checking they cover `targets` exactly.
pub(crate) fn match_predictions<'a>(
    predictions: &'a [Prediction],
    targets: &Corpus,
) -> Result<HashMap<&'a str, &'a Prediction>, EvalError> {
    let mut by_uid = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_uid.insert(p.uid.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.uid.clone()));
        }
    }
    let target_uids: HashSet<&str> = targets.iter().map(|ex| ex.uid.as_str()).collect();
    let mut missing: Vec<&str> = target_uids.iter().copied().filter(|u| !by_uid.contains_key(u)).collect();
    let mut extra: Vec<&str> = by_uid.keys().copied().filter(|u| !target_uids.contains(u)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort_unstable();
        extra.sort_unstable();
        return Err(EvalError::UidMismatch {
            missing: missing.len(),
            extra: extra.len(),
            missing_example: missing.first().map(|s| s.to_string()),
            extra_example: extra.first().map(|s| s.to_string()),
        });
    }
    Ok(by_uid)
}

/// Scores predictions against the target distributions of `targets`.
///
/// Accuracy compares the predicted argmax with each example's reference
/// label (the count majority when counts exist); ties are counted in
/// `n_no_majority` and left out of accuracy but not out of JSD.
pub fn evaluate(predictions: &[Prediction], targets: &Corpus, edges: &[f64]) -> Result<EvalReport, EvalError> {
    let by_uid = match_predictions(predictions, targets)?;
    let mut records = Vec::with_capacity(targets.len());
    for ex in targets.iter() {
        let target = ex.soft_distribution().ok_or_else(|| EvalError::MissingTarget(ex.uid.clone()))?;
        let reference = ex.reference_label().unwrap_or(GoldLabel::NoMajority);
        let pred = by_uid[ex.uid.as_str()];
        records.push(ExampleRecord {
            uid: ex.uid.clone(),
            target,
            predicted: pred.distribution,
            reference,
            predicted_label: pred.label,
            correct: reference.label().map(|l| l == pred.label),
            entropy: entropy(&target),
            jsd: jsd(&target, &pred.distribution),
            kl: kl(&target, &pred.distribution),
        });
    }
    let entropy_bins = entropy_bins(&records, edges)?;
    let n_scored = records.iter().filter(|r| r.correct.is_some()).count();
    let n_correct = records.iter().filter(|r| r.correct == Some(true)).count();
    Ok(EvalReport {
        dataset: targets.name().to_string(),
        n_examples: records.len(),
        mean_jsd: order_free_mean(records.iter().map(|r| r.jsd)),
        mean_kl: order_free_mean(records.iter().map(|r| r.kl)),
        accuracy: ratio(n_correct, n_scored),
        n_correct,
        n_scored,
        n_no_majority: records.len() - n_scored,
        entropy_bins,
        per_example: records,
    })
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dataset      {}\nexamples     {}\nmean JSD     {:.4}\nmean KL      {:.4}\naccuracy     {:.4} ({}/{}, {} without majority)\n\n",
            self.dataset, self.n_examples, self.mean_jsd, self.mean_kl, self.accuracy, self.n_correct, self.n_scored, self.n_no_majority
        );
        out.push_str(&self.entropy_bins.to_text());
        out
    }
}
