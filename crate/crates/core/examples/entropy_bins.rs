//! Per-entropy-range scores and the soft/gold prediction comparison.

use ambinli::eval::{evaluate, prediction_diff_report, DEFAULT_BIN_EDGES};
use ambinli::model::{predict, train, FeatureConfig, TrainConfig};
use ambinli::synth::{PlantedConfig, PlantedGenerator};
use ambinli::TargetMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generator = PlantedGenerator::new(PlantedConfig::neutral_heavy().with_seed(3));
    let corpus = generator.corpus("train", 900).corpus;
    let test = generator.corpus("test", 1000).truth_corpus();
    let cfg = TrainConfig {
        batch_size: 32,
        learning_rate: 1e-2,
        hidden: 32,
        seed: 3,
        features: FeatureConfig::default().with_hash_dim(1 << 10),
        ..TrainConfig::default()
    };
    let soft = train(&cfg.with_mode(TargetMode::Ambiguity), &corpus)?.model;
    let gold = train(&cfg.with_mode(TargetMode::GoldOneHot), &corpus)?.model;
    let soft_preds = predict(&soft, &test)?;
    let gold_preds = predict(&gold, &test)?;

    let report = evaluate(&soft_preds, &test, &DEFAULT_BIN_EDGES)?;
    println!("soft-trained model by target entropy:\n{}", report.entropy_bins.to_text());
    let gold_report = evaluate(&gold_preds, &test, &DEFAULT_BIN_EDGES)?;
    println!("gold-trained model by target entropy:\n{}", gold_report.entropy_bins.to_text());

    let diff = prediction_diff_report("soft", &soft_preds, "gold", &gold_preds, &test)?;
    println!("{}", diff.to_text());
    Ok(())
}
