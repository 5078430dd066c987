use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{order_free_mean, ratio, EvalError};
use crate::convert::TargetMode;
use crate::dist::jsd;
use crate::ingest::Corpus;
use crate::model::{predict, ClassifierModel, TrainConfig, Trainer};
use crate::seed::{derive_seed, rng_for};

/// Fold membership for each example of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    /// Fold index per example, in corpus order.
    pub folds: Vec<usize>,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }

    /// Corpus indices outside and inside `fold`.
    pub fn train_test(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != fold)
    }
}

/// Seeded shuffle, then round-robin assignment to `k` folds.
pub fn kfold_split(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldSplit, EvalError> {
    if k < 2 || corpus.len() < k {
        return Err(EvalError::TooSmall { size: corpus.len(), k });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng_for(seed, "kfold"));
    let mut folds = vec![0; corpus.len()];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    let assignments = corpus.iter().zip(&folds).map(|(ex, &f)| (ex.uid.clone(), f)).collect();
    Ok(FoldSplit { k, seed, folds, assignments })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeScore {
    pub mode: TargetMode,
    pub accuracy: f64,
    pub mean_jsd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Seed shared by every mode's initialization and shuffle on this fold.
    pub seed: u64,
    pub scores: Vec<ModeScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossvalReport {
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Mean over folds, one entry per mode in request order.
    pub mean: Vec<ModeScore>,
}

impl CrossvalReport {
    pub fn mean_accuracy(&self, mode: TargetMode) -> Option<f64> {
        self.mean.iter().find(|s| s.mode == mode).map(|s| s.accuracy)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}-fold cross-validation on {} (seed {})\n\nfold", self.k, self.dataset, self.seed);
        for s in &self.mean {
            out.push_str(&format!("  {:>14}", s.mode.name()));
        }
        out.push('\n');
        for f in &self.folds {
            out.push_str(&format!("{:>4}", f.fold + 1));
            for s in &f.scores {
                out.push_str(&format!("  {:>14.4}", s.accuracy));
            }
            out.push('\n');
        }
        out.push_str("mean");
        for s in &self.mean {
            out.push_str(&format!("  {:>14.4}", s.accuracy));
        }
        out.push('\n');
        out
    }
}

fn fold_result(
    corpus: &Corpus,
    split: &FoldSplit,
    fold: usize,
    cfg: &TrainConfig,
    modes: &[TargetMode],
    base: Option<&ClassifierModel>,
) -> Result<FoldResult, EvalError> {
    let (train_idx, test_idx) = split.train_test(fold);
    let train = corpus.subset(format!("{}-train{fold}", corpus.name()), &train_idx);
    let test = corpus.subset(format!("{}-test{fold}", corpus.name()), &test_idx);
    let seed = derive_seed(cfg.seed, &format!("fold/{fold}"));
    let mut scores = Vec::with_capacity(modes.len());
    for &mode in modes {
        let fold_cfg = TrainConfig { seed, ..cfg.with_mode(mode) };
        let mut trainer = match base {
            Some(model) => Trainer::from_model(fold_cfg, model.clone())?,
            None => Trainer::new(fold_cfg)?,
        };
        trainer.run_phase("train", &train, None, mode, cfg.epochs)?;
        let preds = predict(&trainer.model, &test)?;
        let mut correct = 0;
        let mut scored = 0;
        let mut divergences = Vec::with_capacity(test.len());
        for (ex, p) in test.iter().zip(&preds) {
            if let Some(label) = ex.reference_label().and_then(|g| g.label()) {
                scored += 1;
                correct += usize::from(label == p.label);
            }
            if let Some(t) = ex.soft_distribution() {
                divergences.push(jsd(&t, &p.distribution));
            }
        }
        scores.push(ModeScore { mode, accuracy: ratio(correct, scored), mean_jsd: order_free_mean(divergences.into_iter()) });
    }
    Ok(FoldResult { fold, train_size: train_idx.len(), test_size: test_idx.len(), seed, scores })
}

/// Trains on each `k - 1` fold union and scores the held-out fold, once per mode.
///
/// Every mode on a fold starts from the same initial weights (or a clone of
/// `base`) and sees the same shuffle order, so the target tensor is the only
/// difference. Folds run on separate threads.
pub fn crossval(
    corpus: &Corpus,
    cfg: &TrainConfig,
    k: usize,
    modes: &[TargetMode],
    base: Option<&ClassifierModel>,
) -> Result<CrossvalReport, EvalError> {
    let split = kfold_split(corpus, k, cfg.seed)?;
    let results: Vec<Result<FoldResult, EvalError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..k)
            .map(|fold| {
                let split = &split;
                scope.spawn(move || fold_result(corpus, split, fold, cfg, modes, base))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fold thread panicked")).collect()
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mean = modes
        .iter()
        .enumerate()
        .map(|(m, &mode)| ModeScore {
            mode,
            accuracy: folds.iter().map(|f| f.scores[m].accuracy).sum::<f64>() / k as f64,
            mean_jsd: folds.iter().map(|f| f.scores[m].mean_jsd).sum::<f64>() / k as f64,
        })
        .collect();
    Ok(CrossvalReport { dataset: corpus.name().to_string(), k, seed: cfg.seed, folds, mean })
}
