use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{AnnotatedExample, Corpus};

/// How examples are matched against a holdout set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupKey {
    /// Exact uid match.
    #[default]
    Uid,
    /// Premise and hypothesis after NFC normalization and trimming.
    PremiseHypothesisText,
}

impl DedupKey {
    fn key(self, ex: &AnnotatedExample) -> String {
        match self {
            DedupKey::Uid => ex.uid.clone(),
            DedupKey::PremiseHypothesisText => {
                let premise: String = ex.premise.trim().nfc().collect();
                let hypothesis: String = ex.hypothesis.trim().nfc().collect();
                format!("{premise}\u{1f}{hypothesis}")
            }
        }
    }
}

/// Removes every example whose key appears in `holdout`, keeping survivor order.
/// Returns the filtered corpus and the number of removed examples.
pub fn dedup_against(corpus: &Corpus, holdout: &Corpus, key: DedupKey) -> (Corpus, usize) {
    let held: HashSet<String> = holdout.iter().map(|ex| key.key(ex)).collect();
    let mut out = corpus.clone();
    let removed = out.retain(|ex| !held.contains(&key.key(ex)));
    (out, removed)
}
