//! Field and column name mappings for the raw input formats.
//!
//! Defaults match the public SNLI/MNLI, ChaosNLI and UNLI releases. Nested
//! JSON fields are addressed with dotted paths such as `example.premise`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultilabelFields {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    pub annotator_labels: String,
    pub gold: String,
}

impl Default for MultilabelFields {
    fn default() -> Self {
        MultilabelFields {
            uid: "pairID".into(),
            premise: "sentence1".into(),
            hypothesis: "sentence2".into(),
            annotator_labels: "annotator_labels".into(),
            gold: "gold_label".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosFields {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    /// Object mapping `e` / `n` / `c` (or long label names) to counts.
    pub label_counter: String,
    pub majority_label: String,
    /// Number of annotations every record must carry.
    pub expected_total: u32,
}

impl Default for ChaosFields {
    fn default() -> Self {
        ChaosFields {
            uid: "uid".into(),
            premise: "example.premise".into(),
            hypothesis: "example.hypothesis".into(),
            label_counter: "label_counter".into(),
            majority_label: "majority_label".into(),
            expected_total: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnliColumns {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    pub score: String,
}

impl Default for UnliColumns {
    fn default() -> Self {
        UnliColumns {
            uid: "id".into(),
            premise: "premise".into(),
            hypothesis: "hypothesis".into(),
            score: "unli".into(),
        }
    }
}

/// All mappings together, as they appear under `[columns]` in a run config.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnConfig {
    pub multilabel: MultilabelFields,
    pub chaos: ChaosFields,
    pub unli: UnliColumns,
}
