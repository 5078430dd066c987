//! The config-driven pipeline: build, train, eval and bins through the CLI entry point.

use std::fs;

use ambinli::ingest::canonical::to_canonical_string;
use ambinli::synth::{PlantedConfig, PlantedGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let generator = PlantedGenerator::new(PlantedConfig::default().with_seed(5));
    let planted = generator.corpus("planted", 600);
    fs::write(dir.path().join("train.jsonl"), to_canonical_string(&planted.corpus))?;
    fs::write(dir.path().join("truth.jsonl"), to_canonical_string(&generator.corpus("held", 300).truth_corpus()))?;

    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        r#"seed = 5
output_dir = "out"

[inputs]
corpus = "train.jsonl"
eval_targets = "truth.jsonl"
eval_format = "canonical"

[train]
epochs = 10
hidden = 32
batch_size = 32
learning_rate = 0.01

[train.features]
hash_dim = 1024
"#,
    )?;
    let config = config.to_str().expect("utf-8 path");
    for command in ["train", "eval", "bins"] {
        println!("$ ambinli {command} --config run.toml");
        let code = ambinli::cli::run(["ambinli", command, "--config", config]);
        assert_eq!(code, 0);
    }
    let code = ambinli::cli::run(["ambinli", "train", "--config", config, "--set", "train.target_mode=gold_one_hot", "--set", "output_dir=gold"]);
    assert_eq!(code, 0);
    let mut outputs: Vec<String> = fs::read_dir(dir.path().join("out"))?.map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned())).collect::<Result<_, _>>()?;
    outputs.sort();
    println!("outputs: {}", outputs.join(", "));
    Ok(())
}
