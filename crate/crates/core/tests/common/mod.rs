#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ambinli::dist::{majority_label, GoldLabel, Label, LabelCounts, LabelDistribution};
use ambinli::model::{FeatureConfig, TrainConfig};
use ambinli::synth::{PlantedConfig, PlantedGenerator};
use rand::distr::{weighted::WeightedIndex, Distribution};
use serde_json::json;

/// Training size for the planted soft-versus-gold experiments.
pub const EXPERIMENT_TRAIN: usize = 900;
pub const EXPERIMENT_TEST: usize = 500;

/// Small, fast model settings shared by every planted experiment.
pub fn experiment_config(seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 32,
        learning_rate: 1e-2,
        epochs: 10,
        hidden: 32,
        seed,
        features: FeatureConfig::default().with_hash_dim(1 << 10),
        ..TrainConfig::default()
    }
}

pub fn experiment_generator(seed: u64) -> PlantedGenerator {
    PlantedGenerator::new(PlantedConfig::default().with_seed(seed))
}

fn letter(label: Label) -> &'static str {
    match label {
        Label::Entailment => "e",
        Label::Neutral => "n",
        Label::Contradiction => "c",
    }
}

pub fn annotator_labels(counts: &LabelCounts) -> Vec<&'static str> {
    Label::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l.name(), counts.as_array()[l.index()] as usize))
        .collect()
}

pub fn annotate(rng: &mut impl rand::Rng, truth: &LabelDistribution, n: u32) -> LabelCounts {
    let weights = WeightedIndex::new(truth.as_array()).unwrap();
    LabelCounts::tally((0..n).map(|_| Label::from_index(weights.sample(rng)).unwrap()))
}

pub struct FixturePaths {
    pub snli: PathBuf,
    pub unli: PathBuf,
    pub chaos: PathBuf,
    pub n_snli: usize,
    pub n_unli: usize,
    pub n_chaos: usize,
}

/// Writes SNLI-style (5 annotators), UNLI-style and ChaosNLI-style (100
/// annotators, re-annotating the first `n_chaos` SNLI pairs) files.
pub fn write_fixture(dir: &Path, n_snli: usize, n_unli: usize, n_chaos: usize, seed: u64) -> FixturePaths {
    let generator = experiment_generator(seed);
    let snli = generator.corpus("snli", n_snli);
    let mut rng = ambinli::seed::rng_for(seed, "fixture/annotators");

    let mut text = String::new();
    for (ex, truth) in snli.corpus.iter().zip(&snli.truths) {
        let counts = annotate(&mut rng, truth, 5);
        let gold = majority_label(&counts).unwrap();
        text.push_str(
            &json!({
                "pairID": ex.uid,
                "sentence1": ex.premise,
                "sentence2": ex.hypothesis,
                "annotator_labels": annotator_labels(&counts),
                "gold_label": gold.name(),
            })
            .to_string(),
        );
        text.push('\n');
    }
    let snli_path = dir.join("snli.jsonl");
    fs::write(&snli_path, text).unwrap();

    let mut text = String::new();
    for (ex, truth) in snli.corpus.iter().zip(&snli.truths).take(n_chaos) {
        let counts = annotate(&mut rng, truth, 100);
        let majority = match majority_label(&counts).unwrap() {
            GoldLabel::NoMajority => {
                let top = counts.as_array().into_iter().max().unwrap();
                Label::ALL.into_iter().find(|l| counts.as_array()[l.index()] == top).unwrap()
            }
            g => g.label().unwrap(),
        };
        let counter: serde_json::Map<String, serde_json::Value> = Label::ALL
            .iter()
            .filter(|l| counts.as_array()[l.index()] > 0)
            .map(|&l| (letter(l).to_string(), json!(counts.as_array()[l.index()])))
            .collect();
        text.push_str(
            &json!({
                "uid": ex.uid,
                "label_counter": counter,
                "majority_label": letter(majority),
                "example": {"uid": ex.uid, "premise": ex.premise, "hypothesis": ex.hypothesis, "source": "snli"},
            })
            .to_string(),
        );
        text.push('\n');
    }
    let chaos_path = dir.join("chaos.jsonl");
    fs::write(&chaos_path, text).unwrap();

    let unli = generator.regression_task("unli", n_unli, 0.0);
    let mut text = String::from("id,premise,hypothesis,unli\n");
    for item in &unli {
        text.push_str(&format!("{},{},{},{:.4}\n", item.uid, item.text, item.text_pair.as_deref().unwrap(), item.target));
    }
    let unli_path = dir.join("unli.csv");
    fs::write(&unli_path, text).unwrap();

    FixturePaths { snli: snli_path, unli: unli_path, chaos: chaos_path, n_snli, n_unli, n_chaos }
}

pub fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

pub fn ambinli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ambinli")).args(args).output().expect("binary runs")
}

/// Runs `ambinli <command> --config <config> [--set ...]` and asserts success.
pub fn ambinli_ok(command: &str, config: &Path, sets: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap()];
    for s in sets {
        args.push("--set");
        args.push(s);
    }
    let out = ambinli(&args);
    assert!(
        out.status.success(),
        "ambinli {command} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// File name to SHA-256 for every file in `dir` except manifests.
pub fn output_digests(dir: &Path) -> std::collections::BTreeMap<String, String> {
    use sha2::{Digest, Sha256};
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && !p.file_name().unwrap().to_string_lossy().ends_with("_manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), hex::encode(Sha256::digest(fs::read(&p).unwrap()))))
        .collect()
}

/// Largest relative error between analytic and central-difference gradients
/// for one random model and batch.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)`. Every bias and `W2`
/// entry is checked along with up to 64 sampled `W1` entries from touched rows.
pub fn gradient_check(seed: u64) -> f64 {
    use ambinli::model::{ClassifierModel, Featurizer};
    use rand::Rng;

    const STEP: f64 = 1e-5;
    let mut rng = ambinli::seed::rng_for(seed, "gradcheck");
    let hidden = rng.random_range(2..=12);
    let features = FeatureConfig::default().with_hash_dim(1 << 10);
    let mut model = ClassifierModel::init(features.clone(), hidden, seed).unwrap();
    for b in model.b1.iter_mut().chain(model.b2.iter_mut()) {
        *b = rng.random_range(-0.5..0.5);
    }
    let featurizer = Featurizer::new(features).unwrap();
    let words = ["cat", "dog", "sat", "mat", "red", "runs", "a", "the", "blue", "sky"];
    let sentence = |rng: &mut rand_chacha::ChaCha8Rng| {
        let n = rng.random_range(1..=6);
        (0..n).map(|_| words[rng.random_range(0..words.len())]).collect::<Vec<_>>().join(" ")
    };
    let batch_size = rng.random_range(1..=6);
    let mut xs = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..batch_size {
        let (p, h) = (sentence(&mut rng), sentence(&mut rng));
        xs.push(featurizer.featurize(&p, &h).unwrap());
        let target = if rng.random_bool(0.3) {
            LabelDistribution::one_hot(Label::from_index(rng.random_range(0..3)).unwrap())
        } else {
            LabelDistribution::from_weights([rng.random(), rng.random(), rng.random::<f64>() + 1e-3]).unwrap()
        };
        targets.push(target);
    }
    let batch: Vec<_> = xs.iter().zip(&targets).map(|(x, t)| (x, *t)).collect();
    let (_, grads) = model.loss_and_grad(&batch).unwrap();

    let mut coords: Vec<(usize, usize)> = Vec::new();
    for block in 1..4 {
        coords.extend((0..grads.blocks()[block].len()).map(|i| (block, i)));
    }
    let rows = grads.touched_rows().to_vec();
    for _ in 0..64 {
        let row = rows[rng.random_range(0..rows.len())] as usize;
        coords.push((0, row * hidden + rng.random_range(0..hidden)));
    }

    let mut worst: f64 = 0.0;
    for (block, i) in coords {
        let original = model.blocks_mut()[block][i];
        model.blocks_mut()[block][i] = original + STEP;
        let up = model.loss(&batch).unwrap();
        model.blocks_mut()[block][i] = original - STEP;
        let down = model.loss(&batch).unwrap();
        model.blocks_mut()[block][i] = original;
        let numeric = (up - down) / (2.0 * STEP);
        let analytic = grads.blocks()[block][i];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// Mean JSD to the planted truth on held-out data, `(soft, gold)`.
pub fn jsd_experiment(seed: u64) -> (f64, f64) {
    use ambinli::eval::{evaluate, DEFAULT_BIN_EDGES};
    use ambinli::model::{predict, train};
    use ambinli::TargetMode;

    let generator = experiment_generator(seed);
    let train_set = generator.corpus("train", EXPERIMENT_TRAIN);
    let truth = generator.corpus("test", EXPERIMENT_TEST).truth_corpus();
    let score = |mode| {
        let model = train(&experiment_config(seed).with_mode(mode), &train_set.corpus).unwrap().model;
        evaluate(&predict(&model, &truth).unwrap(), &truth, &DEFAULT_BIN_EDGES).unwrap().mean_jsd
    };
    (score(TargetMode::Ambiguity), score(TargetMode::GoldOneHot))
}

/// Mean 3-fold cross-validated accuracy, `(soft, gold)`.
pub fn crossval_experiment(seed: u64) -> (f64, f64) {
    use ambinli::eval::crossval;
    use ambinli::TargetMode;

    let corpus = experiment_generator(seed).corpus("train", EXPERIMENT_TRAIN).corpus;
    let modes = [TargetMode::Ambiguity, TargetMode::GoldOneHot];
    let report = crossval(&corpus, &experiment_config(seed), 3, &modes, None).unwrap();
    (report.mean_accuracy(modes[0]).unwrap(), report.mean_accuracy(modes[1]).unwrap())
}

/// Transfer of soft- and gold-trained encoders to the planted regression task.
pub fn transfer_experiment(seed: u64) -> ambinli::transfer::TransferTable {
    use ambinli::model::train;
    use ambinli::transfer::{run_trials, HeadConfig, TaskSplits, TransferConfig};
    use ambinli::TargetMode;

    let generator = experiment_generator(seed);
    let corpus = generator.corpus("train", EXPERIMENT_TRAIN).corpus;
    let soft = train(&experiment_config(seed).with_mode(TargetMode::Ambiguity), &corpus).unwrap().model;
    let gold = train(&experiment_config(seed).with_mode(TargetMode::GoldOneHot), &corpus).unwrap().model;
    let items = generator.regression_task("regression", 1000, 0.0);
    let splits = TaskSplits::from_fractions(&items, [0.8, 0.1, 0.1], seed).unwrap();
    let cfg = TransferConfig {
        base_seed: seed,
        head: HeadConfig { hidden: 32, learning_rate: 1e-2, batch_size: 32, ..HeadConfig::default() },
        ..TransferConfig::default()
    };
    run_trials(&cfg, &splits, &[("soft", &soft), ("gold", &gold)]).unwrap()
}
