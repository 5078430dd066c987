//! Parse SNLI-, UNLI- and ChaosNLI-style inputs and build a training corpus.

use std::io::Cursor;

use ambinli::convert::{build_ambinli, ConversionConfig};
use ambinli::ingest::canonical::to_canonical_string;
use ambinli::ingest::{parse_reader, ColumnConfig, InputFormat, ParseOptions};

const SNLI: &str = r#"{"pairID": "p1", "sentence1": "A dog runs.", "sentence2": "An animal moves.", "annotator_labels": ["entailment", "entailment", "neutral", "entailment", "entailment"], "gold_label": "entailment"}
{"pairID": "p2", "sentence1": "A man sings.", "sentence2": "A man is happy.", "annotator_labels": ["entailment", "neutral", "neutral", "entailment", "contradiction"], "gold_label": "-"}
{"pairID": "p3", "sentence1": "Kids play.", "sentence2": "Nobody plays.", "annotator_labels": ["contradiction", "contradiction", "contradiction", "neutral", "contradiction"], "gold_label": "contradiction"}
"#;

const UNLI: &str = "id,premise,hypothesis,unli\nu1,A cat sleeps.,A cat rests.,0.91\nu2,A car parks.,The car is red.,0.42\nu3,Snow falls.,It is hot.,0.01\n";

const CHAOS: &str = r#"{"uid": "p3", "label_counter": {"c": 88, "n": 12}, "majority_label": "c", "example": {"uid": "p3", "premise": "Kids play.", "hypothesis": "Nobody plays.", "source": "snli"}}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let columns = ColumnConfig::default();
    let parse = |text: &str, format, name: &str| parse_reader(Cursor::new(text), format, &columns, &ParseOptions::named(name));
    let snli = parse(SNLI, InputFormat::Snli, "snli")?;
    let unli = parse(UNLI, InputFormat::Unli, "unli")?;
    let chaos = parse(CHAOS, InputFormat::Chaos, "chaos")?;
    println!("parsed {} SNLI, {} UNLI, {} ChaosNLI records", snli.corpus.len(), unli.corpus.len(), chaos.corpus.len());

    let cfg = ConversionConfig { filter_unli: true, ..ConversionConfig::default() };
    let built = build_ambinli(&[snli.corpus, unli.corpus], &[chaos.corpus], &cfg)?;
    for (source, tally) in &built.report.per_source {
        println!("{source}: {tally:?}");
    }
    print!("{}", to_canonical_string(&built.corpus));
    Ok(())
}
