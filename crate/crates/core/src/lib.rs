//! Ambiguity-distribution NLI toolkit.
//!
//! Builds NLI training corpora whose targets are annotator label
//! distributions instead of single gold labels, trains a small hashed
//! bag-of-words classifier against either kind of target, and measures how
//! well predicted distributions match human disagreement.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`dist`] | label distributions, entropy, KL, JSD, soft cross-entropy |
//! | [`ingest`] | SNLI/MNLI, ChaosNLI and UNLI parsers, canonical corpus I/O, dedup |
//! | [`convert`] | counts and UNLI scores to targets, extremity filter, corpus assembly |
//! | [`model`] | featurizer, classifier, gradients, optimizers, training |
//! | [`eval`] | JSD/accuracy reports, entropy bins, k-fold cross-validation, prediction diffs |
//! | [`transfer`] | frozen-encoder probes with early stopping and multi-seed trials |
//! | [`synth`] | planted generators with known label distributions |
//! | [`cli`] | config-driven commands behind the `ambinli` binary |
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod convert;
pub mod dist;
pub mod ingest;
pub mod eval;
pub mod model;
pub mod seed;
pub mod synth;
pub mod transfer;

pub use convert::TargetMode;
pub use dist::{GoldLabel, Label, LabelCounts, LabelDistribution};
pub use ingest::{AnnotatedExample, Corpus, Source};
