use std::io::BufRead;

use super::{AnnotatedExample, IngestError, ParseOptions, ParseSink, Parsed, Source, UnliColumns};

/// Parses a UNLI-style CSV with a header row and one regression score per pair.
pub fn parse_unli_csv<R: BufRead>(reader: R, columns: &UnliColumns, opts: &ParseOptions) -> Result<Parsed, IngestError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::EmptyInput);
    }
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let uid_col = position(&columns.uid)?;
    let premise_col = position(&columns.premise)?;
    let hypothesis_col = position(&columns.hypothesis)?;
    let score_col = position(&columns.score)?;

    let mut sink = ParseSink::new(opts, Source::Unli);
    let mut row_number = 1;
    for result in csv.records() {
        row_number += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(row_number);
                sink.accept(line, Err(format!("malformed row: {e}")));
                continue;
            }
        };
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row_number);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let parsed = field(score_col)
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("score '{}' is not a number: {e}", field(score_col)))
            .and_then(|p| {
                if (0.0..=1.0).contains(&p) {
                    Ok(p)
                } else {
                    Err(format!("out-of-range score {p}"))
                }
            })
            .map(|p| {
                AnnotatedExample::new(field(uid_col), field(premise_col), field(hypothesis_col), Source::Unli)
                    .with_regression(p)
            });
        sink.accept(line, parsed);
    }
    sink.finish(opts)
}
