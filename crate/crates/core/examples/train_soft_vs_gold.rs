//! Train on ambiguity distributions and on gold labels, then compare both
//! against the planted true distributions.

use ambinli::eval::{evaluate, DEFAULT_BIN_EDGES};
use ambinli::model::{predict, train, FeatureConfig, TrainConfig};
use ambinli::synth::{PlantedConfig, PlantedGenerator};
use ambinli::TargetMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = 7;
    let generator = PlantedGenerator::new(PlantedConfig::default().with_seed(seed));
    let planted = generator.corpus("train", 900);
    println!("{} training pairs, {} gold labels corrupted", planted.corpus.len(), planted.flipped);
    let truth = generator.corpus("test", 500).truth_corpus();

    let cfg = TrainConfig {
        batch_size: 32,
        learning_rate: 1e-2,
        hidden: 32,
        seed,
        features: FeatureConfig::default().with_hash_dim(1 << 10),
        ..TrainConfig::default()
    };
    for mode in [TargetMode::Ambiguity, TargetMode::GoldOneHot] {
        let outcome = train(&cfg.with_mode(mode), &planted.corpus)?;
        let last = outcome.history.last().expect("history");
        let report = evaluate(&predict(&outcome.model, &truth)?, &truth, &DEFAULT_BIN_EDGES)?;
        println!(
            "{:<13} final train loss {:.4} | held-out JSD {:.4} accuracy {:.4}",
            mode.name(),
            last.loss,
            report.mean_jsd,
            report.accuracy
        );
    }
    Ok(())
}
