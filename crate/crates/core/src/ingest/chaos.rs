use std::io::BufRead;

use serde_json::Value;

use super::{for_each_json_line, json_path, json_string, AnnotatedExample, ChaosFields, IngestError, ParseOptions, ParseSink, Parsed, Source};
use crate::dist::{majority_label, Label, LabelCounts};

/// Parses ChaosNLI-style JSON lines.
///
/// Counts must sum to `fields.expected_total`. The stored majority label is
/// cross-checked against the counts; on a tied top count the record is kept
/// with gold [`NoMajority`](crate::dist::GoldLabel::NoMajority) as long as the stored label is one of
/// the tied labels.
pub fn parse_chaos_jsonl<R: BufRead>(reader: R, fields: &ChaosFields, opts: &ParseOptions) -> Result<Parsed, IngestError> {
    let mut sink = ParseSink::new(opts, Source::Chaos);
    for_each_json_line(reader, |line, value| {
        sink.accept(line, value.and_then(|v| record(&v, fields)));
    })?;
    sink.finish(opts)
}

fn record(value: &Value, fields: &ChaosFields) -> Result<AnnotatedExample, String> {
    let uid = json_string(value, &fields.uid)?;
    let premise = json_string(value, &fields.premise)?;
    let hypothesis = json_string(value, &fields.hypothesis)?;

    let counter = match json_path(value, &fields.label_counter) {
        Some(Value::Object(map)) => map,
        Some(_) => return Err(format!("field '{}' is not an object", fields.label_counter)),
        None => return Err(format!("missing field '{}'", fields.label_counter)),
    };
    let mut counts = [0u32; 3];
    for (key, n) in counter {
        let label = Label::parse(key).ok_or_else(|| format!("unknown counter key '{key}'"))?;
        let n = n
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| format!("count for '{key}' is not a non-negative integer"))?;
        counts[label.index()] += n;
    }
    let counts = LabelCounts::from_array(counts);
    if counts.total() != fields.expected_total {
        return Err(format!("count mismatch: counts sum to {}, expected {}", counts.total(), fields.expected_total));
    }

    let computed = majority_label(&counts).map_err(|e| e.to_string())?;
    let stored_token = json_string(value, &fields.majority_label)?;
    let stored = Label::parse(&stored_token).ok_or_else(|| format!("unknown majority label '{stored_token}'"))?;
    let consistent = match computed.label() {
        Some(label) => label == stored,
        None => {
            let top = counts.as_array().into_iter().max().unwrap_or(0);
            counts.as_array()[stored.index()] == top
        }
    };
    if !consistent {
        return Err(format!("majority label '{stored}' disagrees with counts {:?}", counts.as_array()));
    }

    Ok(AnnotatedExample::new(uid, premise, hypothesis, Source::Chaos)
        .with_counts(counts)
        .with_gold(computed))
}
