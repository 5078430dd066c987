//! The classifier: `softmax(W2ᵀ · elu(W1ᵀ · x + b1) + b2)`.
//!
//! `W1` is stored row-major with one row of `hidden` weights per hash bucket,
//! so a sparse input touches only the rows of its active features. `W2` is
//! `hidden × 3`, row-major.

use rand::Rng;

use super::features::{FeatureConfig, SparseFeatures};
use super::ModelError;
use crate::dist::{LabelDistribution, NUM_LABELS};
use crate::seed::rng_for;

pub const DEFAULT_HIDDEN: usize = 128;

pub fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp_m1()
    }
}

pub fn elu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        z.exp()
    }
}

/// Numerically stable log-softmax (max-subtracted).
pub fn log_softmax(logits: &[f64; NUM_LABELS]) -> [f64; NUM_LABELS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    logits.map(|l| l - log_z)
}

pub fn softmax(logits: &[f64; NUM_LABELS]) -> LabelDistribution {
    let probs = log_softmax(logits).map(f64::exp);
    LabelDistribution::from_weights(probs).expect("softmax output lies on the simplex")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub features: FeatureConfig,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub seed: u64,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: [f64; NUM_LABELS],
}

/// Gradient of the loss with respect to every parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    touched_rows: Vec<u32>,
}

impl Gradients {
    pub fn zeros_like(model: &ClassifierModel) -> Self {
        Gradients {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
            touched_rows: Vec::new(),
        }
    }

    /// Zeroes the buffers, visiting only the `W1` rows written since the last reset.
    pub fn reset(&mut self, hidden: usize) {
        for &row in &self.touched_rows {
            let start = row as usize * hidden;
            self.w1[start..start + hidden].fill(0.0);
        }
        self.touched_rows.clear();
        self.b1.fill(0.0);
        self.w2.fill(0.0);
        self.b2.fill(0.0);
    }

    pub fn blocks(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    /// `W1` rows with (possibly) nonzero gradient, sorted.
    pub fn touched_rows(&self) -> &[u32] {
        &self.touched_rows
    }
}

impl ClassifierModel {
    /// All-zero parameters.
    pub fn zeros(features: FeatureConfig, hidden: usize) -> Result<Self, ModelError> {
        features.validate()?;
        if hidden == 0 {
            return Err(ModelError::InvalidConfig("hidden size must be positive".into()));
        }
        let dim = features.hash_dim;
        Ok(ClassifierModel {
            features,
            hidden,
            w1: vec![0.0; dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * NUM_LABELS],
            b2: vec![0.0; NUM_LABELS],
            seed: 0,
        })
    }

    /// Uniform(-a, a) weights with `a = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(features: FeatureConfig, hidden: usize, seed: u64) -> Result<Self, ModelError> {
        let mut model = ClassifierModel::zeros(features, hidden)?;
        model.seed = seed;
        let mut rng = rng_for(seed, "model-init");
        let a1 = (6.0 / (model.features.hash_dim + hidden) as f64).sqrt();
        for w in model.w1.iter_mut() {
            *w = rng.random_range(-a1..a1);
        }
        let a2 = (6.0 / (hidden + NUM_LABELS) as f64).sqrt();
        for w in model.w2.iter_mut() {
            *w = rng.random_range(-a2..a2);
        }
        Ok(model)
    }

    pub fn hash_dim(&self) -> usize {
        self.features.hash_dim
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn check(&self, x: &SparseFeatures) -> Result<(), ModelError> {
        match x.indices.iter().find(|&&i| i as usize >= self.hash_dim()) {
            Some(&i) => Err(ModelError::DimensionMismatch { index: i as usize, dim: self.hash_dim() }),
            None => Ok(()),
        }
    }

    pub fn activations(&self, x: &SparseFeatures) -> Result<Activations, ModelError> {
        self.check(x)?;
        let h = self.hidden;
        let mut pre = self.b1.clone();
        for (row, value) in x.iter() {
            let weights = &self.w1[row * h..(row + 1) * h];
            for (p, w) in pre.iter_mut().zip(weights) {
                *p += value * w;
            }
        }
        let hidden: Vec<f64> = pre.iter().map(|&z| elu(z)).collect();
        let mut logits = [self.b2[0], self.b2[1], self.b2[2]];
        for (j, &a) in hidden.iter().enumerate() {
            for (k, logit) in logits.iter_mut().enumerate() {
                *logit += a * self.w2[j * NUM_LABELS + k];
            }
        }
        Ok(Activations { pre, hidden, logits })
    }

    /// Post-ELU hidden activations, the frozen representation used for transfer.
    pub fn hidden_representation(&self, x: &SparseFeatures) -> Result<Vec<f64>, ModelError> {
        Ok(self.activations(x)?.hidden)
    }

    pub fn forward(&self, x: &SparseFeatures) -> Result<LabelDistribution, ModelError> {
        Ok(softmax(&self.activations(x)?.logits))
    }

    /// Mean soft cross-entropy (nats) over the batch and its gradient.
    pub fn loss_and_grad(&self, batch: &[(&SparseFeatures, LabelDistribution)]) -> Result<(f64, Gradients), ModelError> {
        let mut grads = Gradients::zeros_like(self);
        let loss = self.accumulate_grad(batch, &mut grads)?;
        Ok((loss, grads))
    }

    /// Like [`ClassifierModel::loss_and_grad`] but writes into a reusable buffer,
    /// which must have been [`reset`](Gradients::reset) beforehand.
    #[allow(clippy::needless_range_loop)]
    pub fn accumulate_grad(&self, batch: &[(&SparseFeatures, LabelDistribution)], grads: &mut Gradients) -> Result<f64, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let h = self.hidden;
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        let mut dpre = vec![0.0; h];
        for (x, target) in batch {
            let act = self.activations(x)?;
            let log_probs = log_softmax(&act.logits);
            let t = target.as_array();
            total -= t.iter().zip(log_probs.iter()).map(|(ti, lq)| ti * lq).sum::<f64>();

            // softmax + cross-entropy: d loss / d logits = q - t
            let mut dlogits = [0.0; NUM_LABELS];
            for k in 0..NUM_LABELS {
                dlogits[k] = (log_probs[k].exp() - t[k]) * scale;
                grads.b2[k] += dlogits[k];
            }
            for j in 0..h {
                let mut dh = 0.0;
                for k in 0..NUM_LABELS {
                    grads.w2[j * NUM_LABELS + k] += act.hidden[j] * dlogits[k];
                    dh += self.w2[j * NUM_LABELS + k] * dlogits[k];
                }
                dpre[j] = dh * elu_grad(act.pre[j]);
                grads.b1[j] += dpre[j];
            }
            for (row, value) in x.iter() {
                let g = &mut grads.w1[row * h..(row + 1) * h];
                for (gj, dj) in g.iter_mut().zip(&dpre) {
                    *gj += value * dj;
                }
                grads.touched_rows.push(row as u32);
            }
        }
        grads.touched_rows.sort_unstable();
        grads.touched_rows.dedup();
        Ok(total * scale)
    }

    /// Mean loss without gradients.
    pub fn loss(&self, batch: &[(&SparseFeatures, LabelDistribution)]) -> Result<f64, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let mut total = 0.0;
        for (x, target) in batch {
            let log_probs = log_softmax(&self.activations(x)?.logits);
            total -= target.as_array().iter().zip(log_probs.iter()).map(|(t, lq)| t * lq).sum::<f64>();
        }
        Ok(total / batch.len() as f64)
    }
}
