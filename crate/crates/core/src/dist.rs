//! Label distributions over the three NLI classes and the information-theoretic
//! quantities computed on them.
//!
//! Component order is always (entailment, neutral, contradiction). Entropy,
//! KL and JSD are measured in bits so that JSD is bounded by 1 and the entropy
//! of a three-way distribution tops out at log2(3). The training loss
//! ([`soft_cross_entropy`]) uses natural logarithms.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_LABELS: usize = 3;

/// Absolute tolerance on the simplex sum for a distribution to be accepted as-is.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Beyond [`SIMPLEX_TOL`] and up to this tolerance inputs are re-projected.
pub const REPROJECT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("label counts are all zero")]
    ZeroCounts,
    #[error("distribution component is not finite: {0}")]
    NonFinite(f64),
    #[error("negative probability: {0}")]
    NegativeComponent(f64),
    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),
    #[error("predicted probability for {label} must be positive, got {value}")]
    NonpositivePrediction { label: Label, value: f64 },
}

/// One of the three NLI classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Neutral,
    Contradiction,
}

impl Label {
    /// All labels in canonical order. This is also the argmax tie-break order.
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Neutral, Label::Contradiction];

    pub fn index(self) -> usize {
        match self {
            Label::Entailment => 0,
            Label::Neutral => 1,
            Label::Contradiction => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Neutral => "neutral",
            Label::Contradiction => "contradiction",
        }
    }

    /// Accepts the long names used by SNLI/MNLI and the single-letter keys
    /// used by ChaosNLI counters.
    pub fn parse(token: &str) -> Option<Label> {
        match token.trim().to_ascii_lowercase().as_str() {
            "entailment" | "e" => Some(Label::Entailment),
            "neutral" | "n" => Some(Label::Neutral),
            "contradiction" | "c" => Some(Label::Contradiction),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single reference label. `NoMajority` is the "-1" / "-" marker the
/// original corpora use when annotators could not agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GoldLabel {
    Entailment,
    Neutral,
    Contradiction,
    NoMajority,
}

impl GoldLabel {
    pub fn label(self) -> Option<Label> {
        match self {
            GoldLabel::Entailment => Some(Label::Entailment),
            GoldLabel::Neutral => Some(Label::Neutral),
            GoldLabel::Contradiction => Some(Label::Contradiction),
            GoldLabel::NoMajority => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self.label() {
            Some(l) => l.name(),
            None => "-",
        }
    }

    /// Parses a gold-label token. `"-"` and `"-1"` map to `NoMajority`.
    pub fn parse(token: &str) -> Option<GoldLabel> {
        match token.trim() {
            "-" | "-1" => Some(GoldLabel::NoMajority),
            other => Label::parse(other).map(GoldLabel::from),
        }
    }
}

impl From<Label> for GoldLabel {
    fn from(label: Label) -> Self {
        match label {
            Label::Entailment => GoldLabel::Entailment,
            Label::Neutral => GoldLabel::Neutral,
            Label::Contradiction => GoldLabel::Contradiction,
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Annotation counts per label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelCounts {
    pub entailment: u32,
    pub neutral: u32,
    pub contradiction: u32,
}

impl LabelCounts {
    pub fn new(entailment: u32, neutral: u32, contradiction: u32) -> Self {
        LabelCounts { entailment, neutral, contradiction }
    }

    pub fn total(&self) -> u32 {
        self.entailment + self.neutral + self.contradiction
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.entailment, self.neutral, self.contradiction]
    }

    pub fn from_array(counts: [u32; 3]) -> Self {
        LabelCounts::new(counts[0], counts[1], counts[2])
    }

    pub fn add(&mut self, label: Label) {
        match label {
            Label::Entailment => self.entailment += 1,
            Label::Neutral => self.neutral += 1,
            Label::Contradiction => self.contradiction += 1,
        }
    }

    pub fn tally<I: IntoIterator<Item = Label>>(labels: I) -> Self {
        let mut counts = LabelCounts::default();
        for label in labels {
            counts.add(label);
        }
        counts
    }

    pub fn scaled(&self, factor: u32) -> Self {
        LabelCounts::new(
            self.entailment * factor,
            self.neutral * factor,
            self.contradiction * factor,
        )
    }
}

/// A probability triple over (entailment, neutral, contradiction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution([f64; 3]);

impl LabelDistribution {
    /// Validates a probability triple. Sums off by more than [`SIMPLEX_TOL`] but
    /// no more than [`REPROJECT_TOL`] are clamped and rescaled onto the simplex;
    /// anything further off is rejected.
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self, DistError> {
        Self::from_array([entailment, neutral, contradiction])
    }

    pub fn from_array(mut probs: [f64; 3]) -> Result<Self, DistError> {
        let mut clamped = false;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(DistError::NonFinite(*p));
            }
            if *p < 0.0 {
                if *p < -REPROJECT_TOL {
                    return Err(DistError::NegativeComponent(*p));
                }
                *p = 0.0;
                clamped = true;
            }
        }
        let sum: f64 = probs.iter().sum();
        let gap = (sum - 1.0).abs();
        if gap > REPROJECT_TOL || sum <= 0.0 {
            return Err(DistError::NotNormalized(sum));
        }
        if gap > SIMPLEX_TOL || clamped {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        Ok(LabelDistribution(probs))
    }

    /// Builds a distribution from non-negative weights of any scale.
    pub fn from_weights(weights: [f64; 3]) -> Result<Self, DistError> {
        for w in weights {
            if !w.is_finite() {
                return Err(DistError::NonFinite(w));
            }
            if w < 0.0 {
                return Err(DistError::NegativeComponent(w));
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(DistError::NotNormalized(sum));
        }
        Self::from_array([weights[0] / sum, weights[1] / sum, weights[2] / sum])
    }

    pub fn one_hot(label: Label) -> Self {
        let mut probs = [0.0; 3];
        probs[label.index()] = 1.0;
        LabelDistribution(probs)
    }

    pub fn uniform() -> Self {
        LabelDistribution([1.0 / 3.0; 3])
    }

    pub fn entailment(&self) -> f64 {
        self.0[0]
    }

    pub fn neutral(&self) -> f64 {
        self.0[1]
    }

    pub fn contradiction(&self) -> f64 {
        self.0[2]
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.0[label.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// Most probable label, ties broken in the order E > N > C.
    pub fn argmax(&self) -> Label {
        let mut best = Label::Entailment;
        for label in [Label::Neutral, Label::Contradiction] {
            if self.prob(label) > self.prob(best) {
                best = label;
            }
        }
        best
    }

    /// Most probable label, or `NoMajority` when the top probability is shared.
    pub fn strict_argmax(&self) -> GoldLabel {
        let best = self.argmax();
        let top = self.prob(best);
        let tied = Label::ALL
            .iter()
            .filter(|&&l| l != best && self.prob(l) == top)
            .count();
        if tied > 0 {
            GoldLabel::NoMajority
        } else {
            best.into()
        }
    }

    pub fn is_one_hot(&self) -> bool {
        self.0.contains(&1.0) && self.0.iter().filter(|&&p| p == 0.0).count() == 2
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &LabelDistribution, weight: f64) -> Result<Self, DistError> {
        let mut probs = [0.0; 3];
        for (i, p) in probs.iter_mut().enumerate() {
            *p = weight * self.0[i] + (1.0 - weight) * other.0[i];
        }
        Self::from_array(probs)
    }

    pub fn max_abs_diff(&self, other: &LabelDistribution) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[f64; 3]> for LabelDistribution {
    type Error = DistError;

    fn try_from(probs: [f64; 3]) -> Result<Self, Self::Error> {
        LabelDistribution::from_array(probs)
    }
}

impl From<LabelDistribution> for [f64; 3] {
    fn from(d: LabelDistribution) -> Self {
        d.0
    }
}

impl Serialize for LabelDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let probs = <[f64; 3]>::deserialize(deserializer)?;
        LabelDistribution::from_array(probs).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for LabelDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E={:.3} N={:.3} C={:.3}", self.0[0], self.0[1], self.0[2])
    }
}

/// Scales annotation counts down to probabilities.
pub fn normalize(counts: &LabelCounts) -> Result<LabelDistribution, DistError> {
    let total = counts.total();
    if total == 0 {
        return Err(DistError::ZeroCounts);
    }
    let total = f64::from(total);
    LabelDistribution::from_array(counts.as_array().map(|n| f64::from(n) / total))
}

/// The label with the strictly greatest count; `NoMajority` on a tied top count.
pub fn majority_label(counts: &LabelCounts) -> Result<GoldLabel, DistError> {
    if counts.total() == 0 {
        return Err(DistError::ZeroCounts);
    }
    let arr = counts.as_array();
    let top = *arr.iter().max().expect("three counts");
    let winners: Vec<usize> = (0..3).filter(|&i| arr[i] == top).collect();
    Ok(match winners.as_slice() {
        [only] => Label::from_index(*only).expect("index < 3").into(),
        _ => GoldLabel::NoMajority,
    })
}

fn xlog2x_ratio(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        a * (a / b).log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits.
pub fn entropy(d: &LabelDistribution) -> f64 {
    let h: f64 = d
        .0
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Shannon entropy in nats.
pub fn entropy_nats(d: &LabelDistribution) -> f64 {
    let h: f64 = d
        .0
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// KL(a‖b) in bits; `+inf` when `a` puts mass where `b` has none.
pub fn kl(a: &LabelDistribution, b: &LabelDistribution) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        if a.0[i] > 0.0 {
            if b.0[i] <= 0.0 {
                return f64::INFINITY;
            }
            total += xlog2x_ratio(a.0[i], b.0[i]);
        }
    }
    total.max(0.0)
}

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
pub fn jsd(a: &LabelDistribution, b: &LabelDistribution) -> f64 {
    let mut value = 0.0;
    for i in 0..3 {
        let m = 0.5 * (a.0[i] + b.0[i]);
        // m >= a_i / 2, so each term is finite whenever a_i > 0
        value += 0.5 * xlog2x_ratio(a.0[i], m) + 0.5 * xlog2x_ratio(b.0[i], m);
    }
    value.clamp(0.0, 1.0)
}

/// Cross-entropy `-Σ t_i ln q_i` of a predicted distribution against a target.
pub fn soft_cross_entropy(
    target: &LabelDistribution,
    predicted: &LabelDistribution,
) -> Result<f64, DistError> {
    let mut loss = 0.0;
    for label in Label::ALL {
        let q = predicted.prob(label);
        if q <= 0.0 {
            return Err(DistError::NonpositivePrediction { label, value: q });
        }
        loss -= target.prob(label) * q.ln();
    }
    Ok(loss)
}
