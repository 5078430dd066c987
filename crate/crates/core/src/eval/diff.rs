use std::cmp::Ordering;

use serde::Serialize;

use super::{gold_name, match_predictions, EvalError};
use crate::dist::{entropy, GoldLabel, Label, LabelDistribution};
use crate::ingest::Corpus;
use crate::model::Prediction;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffRecord {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    pub target: LabelDistribution,
    pub entropy: f64,
    #[serde(serialize_with = "gold_name")]
    pub reference: GoldLabel,
    pub predicted_a: LabelDistribution,
    pub predicted_b: LabelDistribution,
}

/// Comparison of two models' predictions on the same targets.
///
/// Histograms are indexed entailment, neutral, contradiction and count the
/// reference label of each example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReport {
    pub name_a: String,
    pub name_b: String,
    pub only_a_correct: [usize; 3],
    pub only_b_correct: [usize; 3],
    pub targets: [usize; 3],
    pub targets_no_majority: usize,
    /// Sorted by target entropy, highest first.
    pub only_a: Vec<DiffRecord>,
    pub only_b: Vec<DiffRecord>,
}

pub fn prediction_diff_report(
    name_a: &str,
    preds_a: &[Prediction],
    name_b: &str,
    preds_b: &[Prediction],
    targets: &Corpus,
) -> Result<DiffReport, EvalError> {
    let a = match_predictions(preds_a, targets)?;
    let b = match_predictions(preds_b, targets)?;
    let mut report = DiffReport {
        name_a: name_a.to_string(),
        name_b: name_b.to_string(),
        only_a_correct: [0; 3],
        only_b_correct: [0; 3],
        targets: [0; 3],
        targets_no_majority: 0,
        only_a: Vec::new(),
        only_b: Vec::new(),
    };
    for ex in targets.iter() {
        let reference = ex.reference_label().unwrap_or(GoldLabel::NoMajority);
        let Some(label) = reference.label() else {
            report.targets_no_majority += 1;
            continue;
        };
        report.targets[label.index()] += 1;
        let (pa, pb) = (a[ex.uid.as_str()], b[ex.uid.as_str()]);
        let (ok_a, ok_b) = (pa.label == label, pb.label == label);
        if ok_a == ok_b {
            continue;
        }
        let target = ex.soft_distribution().ok_or_else(|| EvalError::MissingTarget(ex.uid.clone()))?;
        let record = DiffRecord {
            uid: ex.uid.clone(),
            premise: ex.premise.clone(),
            hypothesis: ex.hypothesis.clone(),
            target,
            entropy: entropy(&target),
            reference,
            predicted_a: pa.distribution,
            predicted_b: pb.distribution,
        };
        if ok_a {
            report.only_a_correct[label.index()] += 1;
            report.only_a.push(record);
        } else {
            report.only_b_correct[label.index()] += 1;
            report.only_b.push(record);
        }
    }
    let by_entropy = |x: &DiffRecord, y: &DiffRecord| match y.entropy.total_cmp(&x.entropy) {
        Ordering::Equal => x.uid.cmp(&y.uid),
        o => o,
    };
    report.only_a.sort_by(by_entropy);
    report.only_b.sort_by(by_entropy);
    Ok(report)
}

/// `label,count` rows for external plotting.
pub fn histogram_csv(counts: &[usize; 3]) -> String {
    let mut out = String::from("label,count\n");
    for l in Label::ALL {
        out.push_str(&format!("{},{}\n", l.name(), counts[l.index()]));
    }
    out
}

impl DiffReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("label          targets  only ");
        out.push_str(&format!("{:<10}  only {}\n", self.name_a, self.name_b));
        for l in Label::ALL {
            let i = l.index();
            out.push_str(&format!(
                "{:<13}  {:>7}  {:>15}  {:>5}\n",
                l.name(),
                self.targets[i],
                self.only_a_correct[i],
                self.only_b_correct[i]
            ));
        }
        for (name, records) in [(&self.name_a, &self.only_a), (&self.name_b, &self.only_b)] {
            out.push_str(&format!("\nhighest-entropy examples only {name} gets right:\n"));
            for r in records.iter().take(5) {
                out.push_str(&format!("  [{:.3}] {} | {} | {} ({})\n", r.entropy, r.premise, r.hypothesis, r.reference.name(), r.target));
            }
        }
        out
    }
}
