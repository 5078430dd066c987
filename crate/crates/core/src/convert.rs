//! Turning parsed examples into training targets and assembling corpora.
//!
//! Multi-annotator examples become the normalized annotation counts. UNLI
//! regression scores `p` are mapped piecewise-linearly onto the simplex:
//!
//! ```text
//! p <  0.5  ->  (0,      2p,     1 - 2p)
//! p >= 0.5  ->  (2p - 1, 2 - 2p, 0     )
//! ```
//!
//! so `p = 0` is pure contradiction, `p = 0.5` pure neutral and `p = 1` pure
//! entailment. The gold arm of a controlled comparison replaces every target
//! with the one-hot distribution of the example's single label.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{normalize, GoldLabel, LabelDistribution};
use crate::ingest::{dedup_against, AnnotatedExample, Corpus, DedupKey, IngestError, Source};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("example '{0}' has no annotator counts")]
    MissingCounts(String),
    #[error("regression score {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("example '{0}' has no majority gold label")]
    NoMajorityGold(String),
    #[error("example '{0}' carries no label information")]
    MissingLabel(String),
    #[error("invalid conversion config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Which tensor the trainer sees as the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// The annotator (ambiguity) distribution.
    #[default]
    Ambiguity,
    /// One-hot encoding of the single gold label.
    GoldOneHot,
}

impl TargetMode {
    pub fn name(self) -> &'static str {
        match self {
            TargetMode::Ambiguity => "ambiguity",
            TargetMode::GoldOneHot => "gold_one_hot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConversionConfig {
    /// UNLI examples with `p` strictly below this are dropped when filtering.
    pub unli_low_cut: f64,
    /// UNLI examples with `p` strictly above this are dropped when filtering.
    pub unli_high_cut: f64,
    pub filter_unli: bool,
    pub include_sources: BTreeSet<Source>,
    pub target_mode: TargetMode,
    /// Drop examples whose gold label is no-majority even in ambiguity mode.
    pub exclude_no_majority: bool,
    pub dedup_key: DedupKey,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        ConversionConfig {
            unli_low_cut: 0.05,
            unli_high_cut: 0.97,
            filter_unli: false,
            include_sources: [Source::Snli, Source::Mnli, Source::Unli].into_iter().collect(),
            target_mode: TargetMode::Ambiguity,
            exclude_no_majority: false,
            dedup_key: DedupKey::Uid,
        }
    }
}

impl ConversionConfig {
    pub fn validate(&self) -> Result<(), ConvertError> {
        let (lo, hi) = (self.unli_low_cut, self.unli_high_cut);
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(ConvertError::InvalidConfig(format!(
                "need 0 <= unli_low_cut < unli_high_cut <= 1, got {lo} and {hi}"
            )));
        }
        Ok(())
    }
}

/// Maps a UNLI regression score onto the (E, N, C) simplex.
pub fn unli_to_distribution(p: f64) -> Result<LabelDistribution, ConvertError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ConvertError::OutOfRange(p));
    }
    let probs = if p < 0.5 {
        [0.0, 2.0 * p, 1.0 - 2.0 * p]
    } else {
        [2.0 * p - 1.0, 2.0 - 2.0 * p, 0.0]
    };
    Ok(LabelDistribution::from_array(probs).expect("piecewise map stays on the simplex"))
}

/// Sets the target to the normalized annotation counts.
pub fn counts_to_distribution(ex: &AnnotatedExample) -> Result<AnnotatedExample, ConvertError> {
    let counts = ex.counts.ok_or_else(|| ConvertError::MissingCounts(ex.uid.clone()))?;
    let target = normalize(&counts).map_err(|_| ConvertError::MissingCounts(ex.uid.clone()))?;
    Ok(ex.clone().with_target(target))
}

/// Sets the target to the one-hot distribution of the example's gold label.
///
/// UNLI examples without a recorded gold label use the argmax of their
/// converted score, ties going to entailment, then neutral.
pub fn gold_to_onehot(ex: &AnnotatedExample) -> Result<AnnotatedExample, ConvertError> {
    let gold = match ex.gold {
        Some(g) => g,
        None => match ex.regression_p {
            Some(p) => unli_to_distribution(p)?.argmax().into(),
            None => return Err(ConvertError::MissingLabel(ex.uid.clone())),
        },
    };
    let label = gold.label().ok_or_else(|| ConvertError::NoMajorityGold(ex.uid.clone()))?;
    let mut out = ex.clone().with_target(LabelDistribution::one_hot(label));
    out.gold = Some(gold);
    Ok(out)
}

/// Drops UNLI examples whose score lies outside `[unli_low_cut, unli_high_cut]`.
/// Other examples pass through untouched. Returns the number removed.
pub fn filter_extreme_unli(corpus: &Corpus, cfg: &ConversionConfig) -> (Corpus, usize) {
    let mut out = corpus.clone();
    let removed = out.retain(|ex| match (ex.source, ex.regression_p) {
        (Source::Unli, Some(p)) => p >= cfg.unli_low_cut && p <= cfg.unli_high_cut,
        _ => true,
    });
    (out, removed)
}

/// Per-source bookkeeping for one corpus build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SourceTally {
    pub input: usize,
    pub excluded_source: usize,
    pub dedup_removed: usize,
    pub filter_removed: usize,
    pub no_majority_removed: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub per_source: BTreeMap<Source, SourceTally>,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub corpus: Corpus,
    pub report: BuildReport,
}

fn convert_one(ex: &AnnotatedExample, mode: TargetMode) -> Result<AnnotatedExample, ConvertError> {
    match mode {
        TargetMode::GoldOneHot => gold_to_onehot(ex),
        TargetMode::Ambiguity => {
            if ex.counts.is_some() {
                counts_to_distribution(ex)
            } else if let Some(p) = ex.regression_p {
                let target = unli_to_distribution(p)?;
                let mut out = ex.clone().with_target(target);
                if out.gold.is_none() {
                    out.gold = Some(target.argmax().into());
                }
                Ok(out)
            } else if ex.target.is_some() {
                Ok(ex.clone())
            } else {
                Err(ConvertError::MissingLabel(ex.uid.clone()))
            }
        }
    }
}

/// Builds a training corpus: dedup against every holdout, optional UNLI
/// filtering, per-source conversion, then a deterministic concatenation
/// ordered by source (SNLI, MNLI, UNLI) and original position.
pub fn build_ambinli(sources: &[Corpus], holdouts: &[Corpus], cfg: &ConversionConfig) -> Result<BuildOutcome, ConvertError> {
    cfg.validate()?;
    let mut report = BuildReport::default();
    let mut examples: Vec<AnnotatedExample> = Vec::new();

    for input in sources {
        for (source, n) in input.source_counts() {
            report.per_source.entry(source).or_default().input += n;
        }
        let mut corpus = input.clone();
        let excluded = corpus.retain(|ex| cfg.include_sources.contains(&ex.source));
        if excluded > 0 {
            for ex in input.iter().filter(|ex| !cfg.include_sources.contains(&ex.source)) {
                report.per_source.entry(ex.source).or_default().excluded_source += 1;
            }
        }

        for holdout in holdouts {
            let before = corpus.source_counts();
            let (kept, _) = dedup_against(&corpus, holdout, cfg.dedup_key);
            let after = kept.source_counts();
            for (source, n) in before {
                report.per_source.entry(source).or_default().dedup_removed += n - after.get(&source).copied().unwrap_or(0);
            }
            corpus = kept;
        }

        if cfg.filter_unli {
            let (kept, removed) = filter_extreme_unli(&corpus, cfg);
            report.per_source.entry(Source::Unli).or_default().filter_removed += removed;
            corpus = kept;
        }

        for ex in corpus.into_examples() {
            let drop_no_majority = cfg.exclude_no_majority || cfg.target_mode == TargetMode::GoldOneHot;
            if drop_no_majority && ex.hard_label() == Some(GoldLabel::NoMajority) {
                report.per_source.entry(ex.source).or_default().no_majority_removed += 1;
                continue;
            }
            examples.push(convert_one(&ex, cfg.target_mode)?);
        }
    }

    // stable: original order within each source
    examples.sort_by_key(|ex| ex.source.rank());
    for ex in &examples {
        report.per_source.entry(ex.source).or_default().output += 1;
    }
    report.total = examples.len();

    let mut corpus = Corpus::from_examples("ambinli", examples)?;
    for input in sources {
        for (source, path) in input.paths() {
            if corpus.source_counts().contains_key(source) {
                corpus.record_path(*source, path.clone());
            }
        }
    }
    Ok(BuildOutcome { corpus, report })
}
