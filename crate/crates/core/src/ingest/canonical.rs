//! The canonical corpus format: UTF-8 JSON lines, one object per example.
//!
//! ```text
//! {"uid":"…","premise":"…","hypothesis":"…","source":"snli","counts":[4,1,0],"gold":"entailment","dist":[8.0000000000000004e-1,2.0000000000000001e-1,0.0000000000000000e0]}
//! ```
//!
//! `counts` and `p` (regression score) are mutually exclusive and optional, as
//! are `gold` (`"-"` for no majority) and `dist` (the training target). Keys
//! are written in the order shown. Floats are written with 17 significant
//! digits in exponent form so values round-trip bit-exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::Deserialize;

use super::{for_each_json_line, AnnotatedExample, Corpus, IngestError, ParseOptions, ParseSink, Parsed, Source};
use crate::dist::{GoldLabel, LabelCounts, LabelDistribution};

/// Formats a float with 17 significant digits.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Renders one example as a canonical JSON line (without the newline).
pub fn example_line(ex: &AnnotatedExample) -> String {
    let mut line = String::with_capacity(128 + ex.premise.len() + ex.hypothesis.len());
    let _ = write!(
        line,
        "{{\"uid\":{},\"premise\":{},\"hypothesis\":{},\"source\":\"{}\"",
        json_str(&ex.uid),
        json_str(&ex.premise),
        json_str(&ex.hypothesis),
        ex.source.name()
    );
    if let Some(c) = ex.counts {
        let _ = write!(line, ",\"counts\":[{},{},{}]", c.entailment, c.neutral, c.contradiction);
    }
    if let Some(p) = ex.regression_p {
        let _ = write!(line, ",\"p\":{}", format_f64(p));
    }
    if let Some(g) = ex.gold {
        let _ = write!(line, ",\"gold\":\"{}\"", g.name());
    }
    if let Some(d) = ex.target {
        let [e, n, c] = d.as_array();
        let _ = write!(line, ",\"dist\":[{},{},{}]", format_f64(e), format_f64(n), format_f64(c));
    }
    line.push('}');
    line
}

pub fn write_canonical<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    for ex in corpus.iter() {
        writer.write_all(example_line(ex).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn to_canonical_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for ex in corpus.iter() {
        out.push_str(&example_line(ex));
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    uid: String,
    premise: String,
    hypothesis: String,
    source: String,
    counts: Option<[u32; 3]>,
    p: Option<f64>,
    gold: Option<String>,
    dist: Option<[f64; 3]>,
}

impl Record {
    fn into_example(self) -> Result<AnnotatedExample, String> {
        let source = Source::parse(&self.source).ok_or_else(|| format!("unknown source '{}'", self.source))?;
        if self.counts.is_some() && self.p.is_some() {
            return Err("record carries both counts and p".to_string());
        }
        let mut ex = AnnotatedExample::new(self.uid, self.premise, self.hypothesis, source);
        ex.counts = self.counts.map(LabelCounts::from_array);
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("out-of-range score {p}"));
            }
            ex.regression_p = Some(p);
        }
        if let Some(g) = self.gold {
            ex.gold = Some(GoldLabel::parse(&g).ok_or_else(|| format!("unknown gold label '{g}'"))?);
        }
        if let Some(d) = self.dist {
            ex.target = Some(LabelDistribution::from_array(d).map_err(|e| e.to_string())?);
        }
        Ok(ex)
    }
}

/// Reads a canonical corpus. Provenance is attributed to `opts.origin`.
pub fn read_canonical<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Parsed, IngestError> {
    let unattributed = ParseOptions { origin: String::new(), ..opts.clone() };
    let mut sink = ParseSink::new(&unattributed, Source::Snli);
    for_each_json_line(reader, |line, value| {
        let example = value.and_then(|v| {
            serde_json::from_value::<Record>(v)
                .map_err(|e| format!("invalid record: {e}"))
                .and_then(Record::into_example)
        });
        sink.accept(line, example);
    })?;
    let mut parsed = sink.finish(opts)?;
    if !opts.origin.is_empty() {
        let sources: Vec<Source> = parsed.corpus.source_counts().into_keys().collect();
        for source in sources {
            parsed.corpus.record_path(source, opts.origin.clone());
        }
    }
    Ok(parsed)
}
