//! Parsing of the source formats into [`AnnotatedExample`] records.
//!
//! Three raw formats are understood:
//!
//! * multi-annotator NLI JSON lines (SNLI / MNLI style, five labels per pair),
//! * ChaosNLI-style JSON lines carrying a 100-annotation label counter,
//! * UNLI-style CSV with one regression score in `[0, 1]` per pair.
//!
//! Field and column names come from [`columns`] so differently exported
//! dumps can be read without code changes. Malformed lines are collected
//! rather than dropped; a parse fails outright only when the malformed
//! fraction exceeds [`ParseOptions::max_malformed_fraction`].
//!
//! The canonical corpus format written by [`canonical`] is what every later
//! stage consumes.

pub mod canonical;
mod chaos;
pub mod columns;
mod dedup;
mod multilabel;
mod unli;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::unli_to_distribution;
use crate::dist::{majority_label, normalize, GoldLabel, LabelCounts, LabelDistribution};

pub use chaos::parse_chaos_jsonl;
pub use columns::{ChaosFields, ColumnConfig, MultilabelFields, UnliColumns};
pub use dedup::{dedup_against, DedupKey};
pub use multilabel::parse_multilabel_jsonl;
pub use unli::parse_unli_csv;

/// Where an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// SNLI pairs with the original five annotator labels.
    Snli,
    /// MNLI pairs with the original five annotator labels.
    Mnli,
    /// UNLI pairs with a single regression score.
    Unli,
    /// ChaosNLI pairs with 100 annotations.
    Chaos,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Snli, Source::Mnli, Source::Unli, Source::Chaos];

    pub fn name(self) -> &'static str {
        match self {
            Source::Snli => "snli",
            Source::Mnli => "mnli",
            Source::Unli => "unli",
            Source::Chaos => "chaos",
        }
    }

    pub fn parse(token: &str) -> Option<Source> {
        Source::ALL.into_iter().find(|s| s.name() == token.trim().to_ascii_lowercase())
    }

    /// Position in the deterministic corpus concatenation order.
    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A premise/hypothesis pair with whatever label information its source provides.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedExample {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    pub source: Source,
    pub counts: Option<LabelCounts>,
    pub regression_p: Option<f64>,
    pub gold: Option<GoldLabel>,
    /// Training target, filled in by the convert stage.
    pub target: Option<LabelDistribution>,
}

impl AnnotatedExample {
    pub fn new(uid: impl Into<String>, premise: impl Into<String>, hypothesis: impl Into<String>, source: Source) -> Self {
        AnnotatedExample {
            uid: uid.into(),
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            source,
            counts: None,
            regression_p: None,
            gold: None,
            target: None,
        }
    }

    pub fn with_counts(mut self, counts: LabelCounts) -> Self {
        self.counts = Some(counts);
        self
    }

    pub fn with_regression(mut self, p: f64) -> Self {
        self.regression_p = Some(p);
        self
    }

    pub fn with_gold(mut self, gold: GoldLabel) -> Self {
        self.gold = Some(gold);
        self
    }

    pub fn with_target(mut self, target: LabelDistribution) -> Self {
        self.target = Some(target);
        self
    }

    /// The distribution this example encodes: an explicit target first,
    /// then normalized counts, then the converted regression score.
    pub fn soft_distribution(&self) -> Option<LabelDistribution> {
        if let Some(t) = self.target {
            return Some(t);
        }
        if let Some(c) = self.counts {
            return normalize(&c).ok();
        }
        self.regression_p.and_then(|p| unli_to_distribution(p).ok())
    }

    /// The single label used by gold-label training: the recorded gold label,
    /// else the count majority, else the argmax of the converted score.
    pub fn hard_label(&self) -> Option<GoldLabel> {
        if let Some(g) = self.gold {
            return Some(g);
        }
        if let Some(c) = self.counts {
            return majority_label(&c).ok();
        }
        self.regression_p
            .and_then(|p| unli_to_distribution(p).ok())
            .map(|d| d.argmax().into())
    }

    /// The reference label used for evaluation accuracy: majority of the
    /// annotation counts when present, else the strict argmax of the target.
    pub fn reference_label(&self) -> Option<GoldLabel> {
        if let Some(c) = self.counts {
            return majority_label(&c).ok();
        }
        self.soft_distribution().map(|d| d.strict_argmax())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvenanceEntry {
    pub path: String,
    pub records: usize,
}

/// An ordered collection of examples with unique uids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    name: String,
    examples: Vec<AnnotatedExample>,
    paths: BTreeMap<Source, String>,
}

impl Corpus {
    pub fn new(name: impl Into<String>) -> Self {
        Corpus { name: name.into(), examples: Vec::new(), paths: BTreeMap::new() }
    }

    pub fn from_examples(name: impl Into<String>, examples: Vec<AnnotatedExample>) -> Result<Self, IngestError> {
        let mut corpus = Corpus::new(name);
        for ex in examples {
            corpus.push(ex)?;
        }
        corpus.validate()?;
        Ok(corpus)
    }

    /// Appends an example. Uid uniqueness is checked by [`Corpus::validate`].
    pub fn push(&mut self, example: AnnotatedExample) -> Result<(), IngestError> {
        if example.uid.is_empty() {
            return Err(IngestError::EmptyUid);
        }
        self.examples.push(example);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn examples(&self) -> &[AnnotatedExample] {
        &self.examples
    }

    pub fn examples_mut(&mut self) -> &mut [AnnotatedExample] {
        &mut self.examples
    }

    pub fn into_examples(self) -> Vec<AnnotatedExample> {
        self.examples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AnnotatedExample> {
        self.examples.iter()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn record_path(&mut self, source: Source, path: impl Into<String>) {
        self.paths.insert(source, path.into());
    }

    pub fn paths(&self) -> &BTreeMap<Source, String> {
        &self.paths
    }

    /// Example counts per source.
    pub fn source_counts(&self) -> BTreeMap<Source, usize> {
        let mut counts = BTreeMap::new();
        for ex in &self.examples {
            *counts.entry(ex.source).or_insert(0) += 1;
        }
        counts
    }

    /// Input path and contributed record count per source.
    pub fn provenance(&self) -> BTreeMap<Source, ProvenanceEntry> {
        self.source_counts()
            .into_iter()
            .map(|(source, records)| {
                let path = self.paths.get(&source).cloned().unwrap_or_default();
                (source, ProvenanceEntry { path, records })
            })
            .collect()
    }

    /// Checks the unique-uid invariant.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = HashSet::with_capacity(self.examples.len());
        for ex in &self.examples {
            if !seen.insert(ex.uid.as_str()) {
                return Err(IngestError::DuplicateUid(ex.uid.clone()));
            }
        }
        Ok(())
    }

    /// Keeps examples matching the predicate, preserving order. Returns how many were removed.
    pub fn retain<F: FnMut(&AnnotatedExample) -> bool>(&mut self, keep: F) -> usize {
        let before = self.examples.len();
        self.examples.retain(keep);
        before - self.examples.len()
    }

    /// A new corpus holding the examples at `indices`, in that order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Corpus {
        Corpus {
            name: name.into(),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            paths: self.paths.clone(),
        }
    }

    pub fn extend_from(&mut self, other: Corpus) {
        for (source, path) in other.paths {
            self.paths.entry(source).or_insert(path);
        }
        self.examples.extend(other.examples);
    }
}

/// A single line that could not be turned into an example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub cause: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.cause)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input contains no records")]
    EmptyInput,
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("duplicate uid '{0}'")]
    DuplicateUid(String),
    #[error("example uid is empty")]
    EmptyUid,
    #[error("{failed} of {total} lines malformed (first: {})", .errors.first().map(ToString::to_string).unwrap_or_default())]
    TooManyMalformed { failed: usize, total: usize, errors: Vec<LineError> },
    #[error("{path}: {source}")]
    File { path: String, source: Box<IngestError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Knobs shared by every parser.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub corpus_name: String,
    /// Recorded as the provenance path of the parsed corpus.
    pub origin: String,
    /// Fraction of malformed lines above which the parse is aborted.
    pub max_malformed_fraction: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            corpus_name: "corpus".to_string(),
            origin: String::new(),
            max_malformed_fraction: 0.001,
        }
    }
}

impl ParseOptions {
    pub fn named(name: impl Into<String>) -> Self {
        ParseOptions { corpus_name: name.into(), ..Default::default() }
    }

    pub fn lenient(mut self) -> Self {
        self.max_malformed_fraction = 1.0;
        self
    }
}

/// The result of parsing one input: the corpus plus every malformed line.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub corpus: Corpus,
    pub malformed: Vec<LineError>,
    /// Number of non-blank data lines seen.
    pub lines: usize,
}

/// Accumulates parsed examples and line errors for the parsers.
pub(crate) struct ParseSink {
    corpus: Corpus,
    seen: HashSet<String>,
    malformed: Vec<LineError>,
    lines: usize,
}

impl ParseSink {
    pub(crate) fn new(opts: &ParseOptions, source: Source) -> Self {
        let mut corpus = Corpus::new(opts.corpus_name.clone());
        if !opts.origin.is_empty() {
            corpus.record_path(source, opts.origin.clone());
        }
        ParseSink { corpus, seen: HashSet::new(), malformed: Vec::new(), lines: 0 }
    }

    pub(crate) fn accept(&mut self, line: usize, result: Result<AnnotatedExample, String>) {
        self.lines += 1;
        match result {
            Ok(ex) if ex.uid.is_empty() => self.reject(line, "empty uid".to_string()),
            Ok(ex) if self.seen.contains(&ex.uid) => self.reject(line, format!("duplicate uid '{}'", ex.uid)),
            Ok(ex) => {
                self.seen.insert(ex.uid.clone());
                self.corpus.examples.push(ex);
            }
            Err(cause) => self.reject(line, cause),
        }
    }

    fn reject(&mut self, line: usize, cause: String) {
        self.malformed.push(LineError { line, cause });
    }

    pub(crate) fn finish(self, opts: &ParseOptions) -> Result<Parsed, IngestError> {
        if self.lines == 0 {
            return Err(IngestError::EmptyInput);
        }
        let failed = self.malformed.len();
        if failed as f64 > opts.max_malformed_fraction * self.lines as f64 {
            return Err(IngestError::TooManyMalformed { failed, total: self.lines, errors: self.malformed });
        }
        Ok(Parsed { corpus: self.corpus, malformed: self.malformed, lines: self.lines })
    }
}

/// Walks non-blank lines of a JSON-lines stream, numbering from 1.
pub(crate) fn for_each_json_line<R, F>(reader: R, mut handle: F) -> Result<(), IngestError>
where
    R: BufRead,
    F: FnMut(usize, Result<serde_json::Value, String>),
{
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<serde_json::Value>(&line).map_err(|e| format!("invalid JSON: {e}"));
        handle(idx + 1, parsed);
    }
    Ok(())
}

/// Looks up a dotted path (`"example.premise"`) inside a JSON object.
pub(crate) fn json_path<'a>(value: &'a serde_json::Value, path: &str) -> Option<&'a serde_json::Value> {
    path.split('.').try_fold(value, |v, key| v.get(key))
}

pub(crate) fn json_string(value: &serde_json::Value, path: &str) -> Result<String, String> {
    match json_path(value, path) {
        Some(serde_json::Value::String(s)) => Ok(s.clone()),
        // Some exports store numeric pair ids.
        Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
        Some(_) => Err(format!("field '{path}' is not a string")),
        None => Err(format!("missing field '{path}'")),
    }
}

/// Raw input formats recognised by [`read_path`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Canonical corpus JSON lines written by this crate.
    Canonical,
    Snli,
    Mnli,
    Unli,
    Chaos,
}

/// Opens and parses a file in the given format.
pub fn read_path(
    path: &Path,
    format: InputFormat,
    columns: &ColumnConfig,
    max_malformed_fraction: f64,
) -> Result<Parsed, IngestError> {
    let display = path.display().to_string();
    let wrap = |e: IngestError| IngestError::File { path: display.clone(), source: Box::new(e) };
    let file = File::open(path).map_err(|e| wrap(e.into()))?;
    let reader = BufReader::new(file);
    let opts = ParseOptions {
        corpus_name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string()),
        origin: display.clone(),
        max_malformed_fraction,
    };
    parse_reader(reader, format, columns, &opts).map_err(wrap)
}

/// Parses an already opened stream in the given format.
pub fn parse_reader<R: BufRead>(
    reader: R,
    format: InputFormat,
    columns: &ColumnConfig,
    opts: &ParseOptions,
) -> Result<Parsed, IngestError> {
    match format {
        InputFormat::Canonical => canonical::read_canonical(reader, opts),
        InputFormat::Snli => parse_multilabel_jsonl(reader, Source::Snli, &columns.multilabel, opts),
        InputFormat::Mnli => parse_multilabel_jsonl(reader, Source::Mnli, &columns.multilabel, opts),
        InputFormat::Unli => parse_unli_csv(reader, &columns.unli, opts),
        InputFormat::Chaos => parse_chaos_jsonl(reader, &columns.chaos, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_counts_follow_examples() {
        let mut corpus = Corpus::from_examples(
            "c",
            vec![
                AnnotatedExample::new("a", "p", "h", Source::Snli),
                AnnotatedExample::new("b", "p", "h", Source::Snli),
                AnnotatedExample::new("c", "p", "h", Source::Unli),
            ],
        )
        .unwrap();
        corpus.record_path(Source::Snli, "snli.jsonl");
        let prov = corpus.provenance();
        assert_eq!(prov[&Source::Snli], ProvenanceEntry { path: "snli.jsonl".into(), records: 2 });
        assert_eq!(prov[&Source::Unli].records, 1);
        corpus.retain(|e| e.uid != "a");
        assert_eq!(corpus.provenance()[&Source::Snli].records, 1);
    }

    #[test]
    fn duplicate_uid_detected() {
        let corpus = Corpus::from_examples(
            "c",
            vec![
                AnnotatedExample::new("a", "p", "h", Source::Snli),
                AnnotatedExample::new("a", "p2", "h2", Source::Mnli),
            ],
        )
        ;
        assert!(matches!(corpus, Err(IngestError::DuplicateUid(uid)) if uid == "a"));
    }

    #[test]
    fn label_fallbacks() {
        let unli = AnnotatedExample::new("u", "p", "h", Source::Unli).with_regression(0.9);
        assert_eq!(unli.hard_label(), Some(GoldLabel::Entailment));
        let counted = AnnotatedExample::new("c", "p", "h", Source::Chaos).with_counts(LabelCounts::new(10, 80, 10));
        assert_eq!(counted.reference_label(), Some(GoldLabel::Neutral));
        assert_eq!(counted.soft_distribution().unwrap().neutral(), 0.8);
    }
}
