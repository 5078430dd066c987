//! Planted generators: synthetic NLI pairs whose true label distributions are known.
//!
//! A fixed vocabulary of cue words is drawn up front, each with its own
//! label distribution. An example picks a few distinct cue words for its
//! hypothesis and filler words for its premise; its true distribution is the
//! mean of its cue words' distributions. The gold label is the argmax of the
//! truth, flipped to the runner-up label with probability `flip_rate` when
//! the truth's entropy reaches `ambiguous_entropy`, mimicking a single
//! annotator picking a plausible minority reading. Soft targets therefore
//! carry strictly more signal than gold labels.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Dirichlet;
use serde::{Deserialize, Serialize};

use crate::dist::{entropy, GoldLabel, Label, LabelCounts, LabelDistribution};
use crate::ingest::{AnnotatedExample, Corpus, Source};
use crate::seed::rng_for;
use crate::transfer::TaskItem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub vocab_size: usize,
    pub filler_vocab_size: usize,
    pub cue_words: usize,
    pub filler_words: usize,
    /// Dirichlet concentration of each cue word's label distribution.
    pub word_alpha: [f64; 3],
    /// Entropy (bits) at which gold labels become eligible for corruption.
    pub ambiguous_entropy: f64,
    pub flip_rate: f64,
    /// When set, soft targets are the empirical distribution of this many
    /// simulated annotators instead of the truth itself.
    pub annotators: Option<u32>,
    /// When set, examples carry this many simulated evaluation annotations
    /// as counts, like a ChaosNLI item.
    pub chaos_annotators: Option<u32>,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            vocab_size: 60,
            filler_vocab_size: 40,
            cue_words: 3,
            filler_words: 3,
            word_alpha: [0.5; 3],
            ambiguous_entropy: 0.9,
            flip_rate: 0.2,
            annotators: None,
            chaos_annotators: None,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    /// Cue words lean neutral, so most ambiguity involves the neutral label.
    pub fn neutral_heavy() -> Self {
        PlantedConfig { word_alpha: [0.4, 1.2, 0.4], ..PlantedConfig::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A drawn vocabulary ready to emit corpora and downstream tasks.
#[derive(Debug, Clone)]
pub struct PlantedGenerator {
    cfg: PlantedConfig,
    word_dists: Vec<LabelDistribution>,
}

/// A generated corpus together with each example's true distribution.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub truths: Vec<LabelDistribution>,
    /// Number of examples whose gold label was corrupted.
    pub flipped: usize,
}

impl PlantedCorpus {
    /// The same pairs with the truth as target and its strict argmax as gold,
    /// for scoring predictions against the planted distributions.
    pub fn truth_corpus(&self) -> Corpus {
        let examples = self
            .corpus
            .iter()
            .zip(&self.truths)
            .map(|(ex, truth)| AnnotatedExample {
                counts: None,
                regression_p: None,
                gold: Some(truth.strict_argmax()),
                target: Some(*truth),
                ..ex.clone()
            })
            .collect();
        Corpus::from_examples(format!("{}-truth", self.corpus.name()), examples).expect("uids are unique")
    }
}

struct Drawn {
    premise: String,
    hypothesis: String,
    truth: LabelDistribution,
}

impl PlantedGenerator {
    pub fn new(cfg: PlantedConfig) -> Self {
        assert!(cfg.cue_words >= 1 && cfg.cue_words <= cfg.vocab_size, "cue_words must be in 1..=vocab_size");
        assert!(cfg.filler_vocab_size >= 1, "filler vocabulary must be non-empty");
        let mut rng = rng_for(cfg.seed, "planted/vocab");
        let dirichlet = Dirichlet::new(cfg.word_alpha).expect("positive concentration");
        let word_dists = (0..cfg.vocab_size)
            .map(|_| LabelDistribution::from_weights(dirichlet.sample(&mut rng)).expect("dirichlet sample"))
            .collect();
        PlantedGenerator { cfg, word_dists }
    }

    pub fn config(&self) -> &PlantedConfig {
        &self.cfg
    }

    pub fn word_distribution(&self, word: usize) -> LabelDistribution {
        self.word_dists[word]
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Drawn {
        let cues = sample(rng, self.cfg.vocab_size, self.cfg.cue_words).into_vec();
        let mut mean = [0.0; 3];
        for &w in &cues {
            for (m, p) in mean.iter_mut().zip(self.word_dists[w].as_array()) {
                *m += p / cues.len() as f64;
            }
        }
        let fillers: Vec<String> =
            (0..self.cfg.filler_words).map(|_| format!("fill{:02}", rng.random_range(0..self.cfg.filler_vocab_size))).collect();
        let hypothesis: Vec<String> = cues.iter().map(|w| format!("cue{w:03}")).collect();
        Drawn {
            premise: format!("the {}", fillers.join(" ")),
            hypothesis: hypothesis.join(" "),
            truth: LabelDistribution::from_weights(mean).expect("mean of distributions"),
        }
    }

    fn annotate(rng: &mut ChaCha8Rng, truth: &LabelDistribution, n: u32) -> LabelCounts {
        let weights = WeightedIndex::new(truth.as_array()).expect("valid distribution");
        LabelCounts::tally((0..n).map(|_| Label::from_index(weights.sample(rng)).expect("label index")))
    }

    /// `n` examples named `{name}-{i}`, reproducible from the config seed and `name`.
    pub fn corpus(&self, name: &str, n: usize) -> PlantedCorpus {
        let mut rng = rng_for(self.cfg.seed, &format!("planted/corpus/{name}"));
        let mut examples = Vec::with_capacity(n);
        let mut truths = Vec::with_capacity(n);
        let mut flipped = 0;
        for i in 0..n {
            let drawn = self.draw(&mut rng);
            let truth = drawn.truth;
            let mut gold = truth.argmax();
            let ambiguous = entropy(&truth) >= self.cfg.ambiguous_entropy;
            if ambiguous && rng.random_bool(self.cfg.flip_rate) {
                gold = runner_up(&truth);
                flipped += 1;
            }
            let target = match self.cfg.annotators {
                Some(m) => crate::dist::normalize(&Self::annotate(&mut rng, &truth, m)).expect("nonzero annotators"),
                None => truth,
            };
            let mut ex = AnnotatedExample::new(format!("{name}-{i}"), drawn.premise, drawn.hypothesis, Source::Snli)
                .with_gold(GoldLabel::from(gold))
                .with_target(target);
            if let Some(m) = self.cfg.chaos_annotators {
                ex = ex.with_counts(Self::annotate(&mut rng, &truth, m));
            }
            examples.push(ex);
            truths.push(truth);
        }
        let corpus = Corpus::from_examples(name, examples).expect("generated uids are unique");
        PlantedCorpus { corpus, truths, flipped }
    }

    /// Regression items scored `P(entailment) + P(neutral) / 2` under the truth,
    /// the inverse of the UNLI conversion, plus uniform noise of half-width
    /// `noise`, clamped to [0, 1].
    pub fn regression_task(&self, name: &str, n: usize, noise: f64) -> Vec<TaskItem> {
        let mut rng = rng_for(self.cfg.seed, &format!("planted/regression/{name}"));
        (0..n)
            .map(|i| {
                let d = self.draw(&mut rng);
                let jitter = if noise > 0.0 { rng.random_range(-noise..noise) } else { 0.0 };
                let score = (d.truth.entailment() + 0.5 * d.truth.neutral() + jitter).clamp(0.0, 1.0);
                TaskItem { uid: format!("{name}-{i}"), text: d.premise, text_pair: Some(d.hypothesis), target: score }
            })
            .collect()
    }

    /// Binary items labelled 1 when entailment outweighs contradiction under the truth.
    pub fn binary_task(&self, name: &str, n: usize) -> Vec<TaskItem> {
        let mut rng = rng_for(self.cfg.seed, &format!("planted/binary/{name}"));
        (0..n)
            .map(|i| {
                let d = self.draw(&mut rng);
                let label = if d.truth.entailment() > d.truth.contradiction() { 1.0 } else { 0.0 };
                TaskItem { uid: format!("{name}-{i}"), text: d.premise, text_pair: Some(d.hypothesis), target: label }
            })
            .collect()
    }
}

/// Second most probable label, ties broken entailment, neutral, contradiction.
pub fn runner_up(d: &LabelDistribution) -> Label {
    let top = d.argmax();
    Label::ALL
        .into_iter()
        .filter(|&l| l != top)
        .fold(None, |best: Option<Label>, l| match best {
            Some(b) if d.prob(b) >= d.prob(l) => Some(b),
            _ => Some(l),
        })
        .expect("three labels")
}
