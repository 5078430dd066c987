//! Mini-batch training, the two-phase schedule, and prediction.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, Featurizer, SparseFeatures};
use super::network::{ClassifierModel, Gradients, DEFAULT_HIDDEN};
use super::optim::{Optimizer, OptimizerKind};
use super::ModelError;
use crate::convert::TargetMode;
use crate::dist::{GoldLabel, Label, LabelDistribution};
use crate::ingest::{AnnotatedExample, Corpus};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Gold-label epochs run before the main phase by [`Trainer::two_phase`].
    pub pretrain_epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub target_mode: TargetMode,
    pub hidden: usize,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            learning_rate: 1e-3,
            epochs: 10,
            pretrain_epochs: 3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            target_mode: TargetMode::Ambiguity,
            hidden: DEFAULT_HIDDEN,
            features: FeatureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.hidden == 0 {
            return Err(ModelError::InvalidConfig("hidden size must be positive".into()));
        }
        self.features.validate()
    }

    pub fn with_mode(&self, target_mode: TargetMode) -> Self {
        TrainConfig { target_mode, ..self.clone() }
    }
}

/// One row of the loss history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    /// Counts across phases, starting at 1.
    pub epoch: usize,
    pub phase: String,
    pub split: String,
    pub loss: f64,
    /// Accuracy against the hard label; NaN when no example has one.
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    /// Writes the history as CSV with columns `epoch,phase,split,loss,accuracy`.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<(), ModelError> {
        write_history_csv(&self.history, out)
    }
}

pub fn write_history_csv<W: Write>(history: &[EpochRecord], mut out: W) -> Result<(), ModelError> {
    writeln!(out, "epoch,phase,split,loss,accuracy")?;
    for r in history {
        writeln!(out, "{},{},{},{:.10},{:.6}", r.epoch, r.phase, r.split, r.loss, r.accuracy)?;
    }
    Ok(())
}

/// The target an example contributes under `mode`.
///
/// `Ok(None)` means the example is skipped: gold-label training has nothing
/// to learn from a pair whose annotators had no majority.
pub fn training_target(ex: &AnnotatedExample, mode: TargetMode) -> Result<Option<LabelDistribution>, ModelError> {
    let missing = || ModelError::TargetModeMismatch { uid: ex.uid.clone(), mode: mode.name() };
    match mode {
        TargetMode::Ambiguity => ex.soft_distribution().map(Some).ok_or_else(missing),
        TargetMode::GoldOneHot => match ex.hard_label().ok_or_else(missing)? {
            GoldLabel::NoMajority => Ok(None),
            g => Ok(g.label().map(LabelDistribution::one_hot)),
        },
    }
}

pub fn featurize_corpus(featurizer: &Featurizer, corpus: &Corpus) -> Result<Vec<SparseFeatures>, ModelError> {
    corpus
        .iter()
        .map(|ex| {
            featurizer
                .featurize(&ex.premise, &ex.hypothesis)
                .map_err(|e| ModelError::Example { uid: ex.uid.clone(), source: Box::new(e) })
        })
        .collect()
}

/// Featurized examples with their targets and hard labels.
struct Prepared {
    features: Vec<SparseFeatures>,
    targets: Vec<LabelDistribution>,
    labels: Vec<Option<Label>>,
}

impl Prepared {
    fn new(featurizer: &Featurizer, corpus: &Corpus, mode: TargetMode) -> Result<Self, ModelError> {
        let all = featurize_corpus(featurizer, corpus)?;
        let mut prepared = Prepared { features: Vec::new(), targets: Vec::new(), labels: Vec::new() };
        for (ex, x) in corpus.iter().zip(all) {
            if let Some(t) = training_target(ex, mode)? {
                prepared.features.push(x);
                prepared.targets.push(t);
                prepared.labels.push(ex.hard_label().and_then(GoldLabel::label));
            }
        }
        Ok(prepared)
    }

    fn len(&self) -> usize {
        self.features.len()
    }

    fn metrics(&self, model: &ClassifierModel) -> Result<(f64, f64), ModelError> {
        let batch: Vec<_> = self.features.iter().zip(self.targets.iter().copied()).collect();
        let loss = model.loss(&batch)?;
        let mut correct = 0usize;
        let mut scored = 0usize;
        for (x, label) in self.features.iter().zip(&self.labels) {
            if let Some(label) = label {
                scored += 1;
                correct += usize::from(model.forward(x)?.argmax() == *label);
            }
        }
        let accuracy = if scored == 0 { f64::NAN } else { correct as f64 / scored as f64 };
        Ok((loss, accuracy))
    }
}

/// Runs training phases on a model, accumulating a single history.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: TrainConfig,
    pub model: ClassifierModel,
    pub history: Vec<EpochRecord>,
}

impl Trainer {
    /// A freshly initialized model from `cfg.features`, `cfg.hidden` and `cfg.seed`.
    pub fn new(cfg: TrainConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let model = ClassifierModel::init(cfg.features.clone(), cfg.hidden, cfg.seed)?;
        Ok(Trainer { cfg, model, history: Vec::new() })
    }

    /// Continues from an existing model; its feature config and hidden size win.
    pub fn from_model(cfg: TrainConfig, model: ClassifierModel) -> Result<Self, ModelError> {
        let cfg = TrainConfig { features: model.features.clone(), hidden: model.hidden, ..cfg };
        cfg.validate()?;
        Ok(Trainer { cfg, model, history: Vec::new() })
    }

    /// Trains for `epochs` epochs against targets of `mode` with a fresh optimizer.
    pub fn run_phase(
        &mut self,
        phase: &str,
        corpus: &Corpus,
        dev: Option<&Corpus>,
        mode: TargetMode,
        epochs: usize,
    ) -> Result<(), ModelError> {
        if epochs == 0 {
            return Ok(());
        }
        let featurizer = Featurizer::new(self.model.features.clone())?;
        let train = Prepared::new(&featurizer, corpus, mode)?;
        if train.len() == 0 {
            return Err(ModelError::EmptyCorpus);
        }
        let dev = dev.map(|d| Prepared::new(&featurizer, d, mode)).transpose()?.filter(|d| d.len() > 0);

        let sizes = [self.model.w1.len(), self.model.b1.len(), self.model.w2.len(), self.model.b2.len()];
        let mut optimizer = Optimizer::new(self.cfg.optimizer, self.cfg.learning_rate, &sizes);
        let mut grads = Gradients::zeros_like(&self.model);
        let mut rng = rng_for(self.cfg.seed, &format!("shuffle/{phase}"));
        let mut order: Vec<usize> = (0..train.len()).collect();
        let first_epoch = self.history.iter().map(|r| r.epoch).max().unwrap_or(0);

        for epoch in 1..=epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(self.cfg.batch_size) {
                let batch: Vec<_> = chunk.iter().map(|&i| (&train.features[i], train.targets[i])).collect();
                grads.reset(self.model.hidden);
                self.model.accumulate_grad(&batch, &mut grads)?;
                optimizer.step(&mut self.model.blocks_mut(), &grads.blocks());
            }
            let mut record = |split: &str, data: &Prepared| -> Result<(), ModelError> {
                let (loss, accuracy) = data.metrics(&self.model)?;
                self.history.push(EpochRecord {
                    epoch: first_epoch + epoch,
                    phase: phase.to_string(),
                    split: split.to_string(),
                    loss,
                    accuracy,
                });
                Ok(())
            };
            record("train", &train)?;
            if let Some(dev) = &dev {
                record("dev", dev)?;
            }
        }
        Ok(())
    }

    /// Gold-label pretraining for `pretrain_epochs`, then `epochs` on the configured targets.
    pub fn two_phase(&mut self, pretrain: &Corpus, finetune: &Corpus, dev: Option<&Corpus>) -> Result<(), ModelError> {
        self.run_phase("pretrain", pretrain, dev, TargetMode::GoldOneHot, self.cfg.pretrain_epochs)?;
        self.run_phase("finetune", finetune, dev, self.cfg.target_mode, self.cfg.epochs)
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome { model: self.model, history: self.history }
    }
}

/// Single-phase training on `cfg.target_mode` targets.
pub fn train(cfg: &TrainConfig, corpus: &Corpus) -> Result<TrainOutcome, ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let mut trainer = Trainer::new(cfg.clone())?;
    trainer.run_phase("train", corpus, None, cfg.target_mode, cfg.epochs)?;
    Ok(trainer.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub uid: String,
    pub distribution: LabelDistribution,
    /// Argmax with ties broken entailment, neutral, contradiction.
    pub label: Label,
}

pub fn predict(model: &ClassifierModel, corpus: &Corpus) -> Result<Vec<Prediction>, ModelError> {
    let featurizer = Featurizer::new(model.features.clone())?;
    corpus
        .iter()
        .map(|ex| {
            let x = featurizer
                .featurize(&ex.premise, &ex.hypothesis)
                .map_err(|e| ModelError::Example { uid: ex.uid.clone(), source: Box::new(e) })?;
            let distribution = model.forward(&x)?;
            Ok(Prediction { uid: ex.uid.clone(), distribution, label: distribution.argmax() })
        })
        .collect()
}
