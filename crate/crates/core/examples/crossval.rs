//! Three-fold cross-validation comparing ambiguity and gold targets.

use ambinli::eval::crossval;
use ambinli::model::{FeatureConfig, TrainConfig};
use ambinli::synth::{PlantedConfig, PlantedGenerator};
use ambinli::TargetMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PlantedGenerator::new(PlantedConfig::default().with_seed(1)).corpus("planted", 900).corpus;
    let cfg = TrainConfig {
        batch_size: 32,
        learning_rate: 1e-2,
        hidden: 32,
        seed: 1,
        features: FeatureConfig::default().with_hash_dim(1 << 10),
        ..TrainConfig::default()
    };
    let report = crossval(&corpus, &cfg, 3, &[TargetMode::Ambiguity, TargetMode::GoldOneHot], None)?;
    print!("{}", report.to_text());
    for score in &report.mean {
        println!("{}: mean JSD to annotator distribution {:.4}", score.mode.name(), score.mean_jsd);
    }
    Ok(())
}
