use std::io::BufRead;

use serde_json::Value;

use super::{for_each_json_line, json_path, json_string, AnnotatedExample, IngestError, MultilabelFields, ParseOptions, ParseSink, Parsed, Source};
use crate::dist::{GoldLabel, Label, LabelCounts};

/// Parses SNLI/MNLI-style JSON lines with a list of annotator labels per pair.
///
/// Annotator labels are tallied into counts; a gold label of `"-"` becomes
/// [`GoldLabel::NoMajority`](crate::dist::GoldLabel::NoMajority).
pub fn parse_multilabel_jsonl<R: BufRead>(
    reader: R,
    source: Source,
    fields: &MultilabelFields,
    opts: &ParseOptions,
) -> Result<Parsed, IngestError> {
    let mut sink = ParseSink::new(opts, source);
    for_each_json_line(reader, |line, value| {
        sink.accept(line, value.and_then(|v| record(&v, source, fields)));
    })?;
    sink.finish(opts)
}

fn record(value: &Value, source: Source, fields: &MultilabelFields) -> Result<AnnotatedExample, String> {
    let uid = json_string(value, &fields.uid)?;
    let premise = json_string(value, &fields.premise)?;
    let hypothesis = json_string(value, &fields.hypothesis)?;

    let labels = match json_path(value, &fields.annotator_labels) {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(format!("field '{}' is not a list", fields.annotator_labels)),
        None => return Err(format!("missing field '{}'", fields.annotator_labels)),
    };
    if labels.is_empty() {
        return Err("no annotator labels".to_string());
    }
    let mut counts = LabelCounts::default();
    for item in labels {
        let token = item.as_str().ok_or("annotator label is not a string")?;
        let label = Label::parse(token).ok_or_else(|| format!("unknown annotator label '{token}'"))?;
        counts.add(label);
    }

    let gold_token = json_string(value, &fields.gold)?;
    let gold = GoldLabel::parse(&gold_token).ok_or_else(|| format!("unknown gold label '{gold_token}'"))?;

    Ok(AnnotatedExample::new(uid, premise, hypothesis, source)
        .with_counts(counts)
        .with_gold(gold))
}
