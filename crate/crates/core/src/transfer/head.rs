use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{TaskKind, TransferError};
use crate::model::network::{elu, elu_grad};
use crate::model::{Optimizer, OptimizerKind};
use crate::seed::rng_for;

/// Fully connected layer, weights row-major `inputs × outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = (0..inputs * outputs).map(|_| rng.random_range(-a..a)).collect();
        Dense { inputs, outputs, w, b: vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.b.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w[i * self.outputs..(i + 1) * self.outputs];
            for (zj, wj) in z.iter_mut().zip(row) {
                *zj += xi * wj;
            }
        }
        z
    }
}

/// A task head: one linear layer, or two with an ELU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub kind: TaskKind,
    pub layers: Vec<Dense>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Log-probabilities of a two-way softmax.
fn log_softmax2(z: &[f64]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

impl Head {
    pub fn init(input_dim: usize, depth: usize, hidden: usize, kind: TaskKind, seed: u64) -> Result<Self, TransferError> {
        if input_dim == 0 {
            return Err(TransferError::EmptyData);
        }
        let out = kind.outputs();
        let mut rng = rng_for(seed, "transfer/head-init");
        let layers = match depth {
            1 => vec![Dense::init(input_dim, out, &mut rng)],
            2 if hidden > 0 => vec![Dense::init(input_dim, hidden, &mut rng), Dense::init(hidden, out, &mut rng)],
            _ => return Err(TransferError::InvalidConfig(format!("head depth must be 1 or 2 with a positive hidden size, got {depth}"))),
        };
        Ok(Head { kind, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    /// Pre-activations of every layer; ELU sits between layers only.
    fn pass(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = if i == 0 {
                layer.apply(x)
            } else {
                let a: Vec<f64> = pres[i - 1].iter().map(|&v| elu(v)).collect();
                layer.apply(&a)
            };
            pres.push(z);
        }
        pres
    }

    /// Sigmoid score for regression, probability of class 1 for classification.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let pres = self.pass(x);
        let out = pres.last().expect("at least one layer");
        match self.kind {
            TaskKind::Regression01 => sigmoid(out[0]),
            TaskKind::BinaryClassification => log_softmax2(out)[1].exp(),
        }
    }

    /// Squared error for regression, cross-entropy (nats) for classification.
    pub fn example_loss(&self, x: &[f64], y: f64) -> f64 {
        let pres = self.pass(x);
        let out = pres.last().expect("at least one layer");
        match self.kind {
            TaskKind::Regression01 => (sigmoid(out[0]) - y).powi(2),
            TaskKind::BinaryClassification => -log_softmax2(out)[usize::from(y == 1.0)],
        }
    }

    pub fn mean_loss(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        xs.iter().zip(ys).map(|(x, &y)| self.example_loss(x, y)).sum::<f64>() / xs.len() as f64
    }

    fn sizes(&self) -> Vec<usize> {
        self.layers.iter().flat_map(|l| [l.w.len(), l.b.len()]).collect()
    }

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.sizes().into_iter().map(|n| vec![0.0; n]).collect()
    }

    /// Adds the gradient of `scale · loss(x, y)` into `grads` (w, b per layer).
    fn backprop(&self, x: &[f64], y: f64, scale: f64, grads: &mut [Vec<f64>]) {
        let pres = self.pass(x);
        let out = pres.last().expect("at least one layer");
        let mut delta: Vec<f64> = match self.kind {
            TaskKind::Regression01 => {
                let s = sigmoid(out[0]);
                vec![2.0 * (s - y) * s * (1.0 - s) * scale]
            }
            TaskKind::BinaryClassification => {
                let lp = log_softmax2(out);
                let t = [f64::from(y != 1.0), f64::from(y == 1.0)];
                vec![(lp[0].exp() - t[0]) * scale, (lp[1].exp() - t[1]) * scale]
            }
        };
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input: Vec<f64> = if li == 0 { x.to_vec() } else { pres[li - 1].iter().map(|&v| elu(v)).collect() };
            let (gw, rest) = grads[2 * li..].split_at_mut(1);
            for (i, &xi) in input.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut gw[0][i * layer.outputs..(i + 1) * layer.outputs];
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += xi * d;
                }
            }
            for (g, d) in rest[0].iter_mut().zip(&delta) {
                *g += d;
            }
            if li > 0 {
                delta = (0..layer.inputs)
                    .map(|i| {
                        let row = &layer.w[i * layer.outputs..(i + 1) * layer.outputs];
                        let back: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                        back * elu_grad(pres[li - 1][i])
                    })
                    .collect();
            }
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.w.as_mut_slice(), l.b.as_mut_slice()]).collect()
    }
}

/// Stop after `patience` consecutive epochs without improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    /// Improvement means the loss drops below the best by more than this.
    pub min_improvement: f64,
    best: f64,
    best_epoch: Option<usize>,
    stale: usize,
    epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_improvement: f64) -> Self {
        EarlyStopping { patience, min_improvement, best: f64::INFINITY, best_epoch: None, stale: 0, epochs: 0 }
    }

    pub fn observe(&mut self, loss: f64) -> StopDecision {
        self.epochs += 1;
        if self.best_epoch.is_none() || loss < self.best - self.min_improvement {
            self.best = loss;
            self.best_epoch = Some(self.epochs);
            self.stale = 0;
            return StopDecision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    /// 1-based epoch of the best loss seen.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub depth: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_improvement: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            depth: 1,
            hidden: 128,
            learning_rate: 1e-3,
            batch_size: 128,
            optimizer: OptimizerKind::Adam,
            max_epochs: 100,
            patience: 2,
            min_improvement: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeadOutcome {
    /// Parameters from the epoch with the lowest dev loss.
    pub head: Head,
    pub dev_curve: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Trains a fresh head on frozen representations with dev-loss early stopping.
pub fn train_head(
    train: (&[Vec<f64>], &[f64]),
    dev: (&[Vec<f64>], &[f64]),
    kind: TaskKind,
    cfg: &HeadConfig,
    seed: u64,
) -> Result<HeadOutcome, TransferError> {
    let (xs, ys) = train;
    if xs.is_empty() || dev.0.is_empty() {
        return Err(TransferError::EmptyData);
    }
    if xs.len() != ys.len() || dev.0.len() != dev.1.len() {
        return Err(TransferError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) || cfg.max_epochs == 0 || cfg.patience == 0 {
        return Err(TransferError::InvalidConfig(
            "head needs batch_size, max_epochs and patience >= 1 and a finite learning_rate >= 0".into(),
        ));
    }
    for (i, &y) in ys.iter().chain(dev.1).enumerate() {
        super::task::check_target(kind, &format!("#{i}"), y)?;
    }
    let mut head = Head::init(xs[0].len(), cfg.depth, cfg.hidden, kind, seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, &head.sizes());
    let mut grads = head.zero_grads();
    let mut rng = rng_for(seed, "transfer/head-shuffle");
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.min_improvement);
    let mut best = head.clone();
    let mut dev_curve = Vec::new();
    let mut stopped_early = false;

    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| g.fill(0.0));
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                head.backprop(&xs[i], ys[i], scale, &mut grads);
            }
            let views: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            optimizer.step(&mut head.params_mut(), &views);
        }
        let loss = head.mean_loss(dev.0, dev.1);
        dev_curve.push(loss);
        match stopper.observe(loss) {
            StopDecision::Improved => best = head.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(HeadOutcome { head: best, dev_curve, best_epoch: stopper.best_epoch().expect("at least one epoch"), stopped_early })
}
