//! Freeze two trained encoders and fit regression heads on a downstream task.

use ambinli::model::io::model_hash;
use ambinli::model::{train, FeatureConfig, TrainConfig};
use ambinli::synth::{PlantedConfig, PlantedGenerator};
use ambinli::transfer::{run_trials, HeadConfig, TaskSplits, TransferConfig};
use ambinli::TargetMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generator = PlantedGenerator::new(PlantedConfig::default().with_seed(2));
    let corpus = generator.corpus("train", 900).corpus;
    let cfg = TrainConfig {
        batch_size: 32,
        learning_rate: 1e-2,
        hidden: 32,
        seed: 2,
        features: FeatureConfig::default().with_hash_dim(1 << 10),
        ..TrainConfig::default()
    };
    let soft = train(&cfg.with_mode(TargetMode::Ambiguity), &corpus)?.model;
    let gold = train(&cfg.with_mode(TargetMode::GoldOneHot), &corpus)?.model;
    let before = model_hash(&soft);

    let items = generator.regression_task("downstream", 1000, 0.05);
    let splits = TaskSplits::from_fractions(&items, [0.8, 0.1, 0.1], 2)?;
    let transfer = TransferConfig {
        base_seed: 2,
        head: HeadConfig { hidden: 32, learning_rate: 1e-2, batch_size: 32, ..HeadConfig::default() },
        ..TransferConfig::default()
    };
    let table = run_trials(&transfer, &splits, &[("soft", &soft), ("gold", &gold)])?;
    print!("{}", table.to_text());
    assert_eq!(model_hash(&soft), before);
    println!("encoder unchanged: {before}");
    Ok(())
}
