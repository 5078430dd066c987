//! Hashed bag-of-n-grams features for premise/hypothesis pairs.
//!
//! Text is lowercased and split on anything that is not alphanumeric, which
//! both splits on whitespace and strips punctuation. Each pair produces
//! three buckets of features: premise n-grams, hypothesis n-grams, and the
//! set of unigrams that occur in both texts. Feature strings are hashed with
//! seeded 64-bit FNV-1a, so indices are identical on every platform and
//! release. The final vector is L2-normalized.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ModelError;

pub const MIN_HASH_DIM: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Number of hash buckets; a power of two no smaller than 1024.
    pub hash_dim: usize,
    /// N-gram orders to extract, a subset of {1, 2}.
    pub ngram_orders: BTreeSet<usize>,
    pub hash_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { hash_dim: 1 << 15, ngram_orders: [1, 2].into_iter().collect(), hash_seed: 0 }
    }
}

impl FeatureConfig {
    pub fn with_hash_dim(mut self, hash_dim: usize) -> Self {
        self.hash_dim = hash_dim;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.hash_dim.is_power_of_two() || self.hash_dim < MIN_HASH_DIM {
            return Err(ModelError::InvalidConfig(format!(
                "hash_dim must be a power of two >= {MIN_HASH_DIM}, got {}",
                self.hash_dim
            )));
        }
        if u32::try_from(self.hash_dim).is_err() {
            return Err(ModelError::InvalidConfig("hash_dim does not fit in 32 bits".into()));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.iter().any(|&n| n != 1 && n != 2) {
            return Err(ModelError::InvalidConfig(format!(
                "ngram_orders must be a non-empty subset of {{1, 2}}, got {:?}",
                self.ngram_orders
            )));
        }
        Ok(())
    }

    /// Bit mask of n-gram orders (bit 0 unigrams, bit 1 bigrams).
    pub fn ngram_mask(&self) -> u32 {
        self.ngram_orders.iter().fold(0, |mask, &n| mask | (1 << (n - 1)))
    }

    pub fn from_mask(mask: u32) -> BTreeSet<usize> {
        (1..=2).filter(|n| mask & (1 << (n - 1)) != 0).collect()
    }
}

/// A sparse feature vector with sorted, unique indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatures {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseFeatures {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    fn from_counts(counts: BTreeMap<u32, f64>) -> Self {
        let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        let (indices, values) = counts.into_iter().map(|(i, v)| (i, v * scale)).unzip();
        SparseFeatures { indices, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucket {
    Premise,
    Hypothesis,
    Overlap,
}

impl Bucket {
    fn tag(self) -> &'static str {
        match self {
            Bucket::Premise => "p",
            Bucket::Hypothesis => "h",
            Bucket::Overlap => "o",
        }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut hash = FNV_OFFSET;
    for byte in seed.to_le_bytes().iter().chain(parts.iter().flat_map(|p| p.iter())) {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Maps token sequences to hashed sparse vectors.
#[derive(Debug, Clone)]
pub struct Featurizer {
    cfg: FeatureConfig,
}

impl Featurizer {
    pub fn new(cfg: FeatureConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        Ok(Featurizer { cfg })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    fn index(&self, bucket: Bucket, gram: &[String]) -> u32 {
        let joined = gram.join(" ");
        let order = [gram.len() as u8];
        let hash = fnv1a(self.cfg.hash_seed, &[bucket.tag().as_bytes(), &order, b":", joined.as_bytes()]);
        (hash & (self.cfg.hash_dim as u64 - 1)) as u32
    }

    fn ngram_indices(&self, bucket: Bucket, tokens: &[String], out: &mut Vec<u32>) {
        for &n in &self.cfg.ngram_orders {
            for gram in tokens.windows(n) {
                out.push(self.index(bucket, gram));
            }
        }
    }

    /// Hashed indices per bucket, with repeats, before merging.
    pub fn bucket_indices(&self, premise: &str, hypothesis: &str) -> Result<[Vec<u32>; 3], ModelError> {
        let p_tokens = tokenize(premise);
        let h_tokens = tokenize(hypothesis);
        if p_tokens.is_empty() || h_tokens.is_empty() {
            return Err(ModelError::EmptyText);
        }
        let mut p = Vec::new();
        let mut h = Vec::new();
        self.ngram_indices(Bucket::Premise, &p_tokens, &mut p);
        self.ngram_indices(Bucket::Hypothesis, &h_tokens, &mut h);
        let p_set: BTreeSet<&String> = p_tokens.iter().collect();
        let shared: BTreeSet<&String> = h_tokens.iter().filter(|t| p_set.contains(t)).collect();
        let o = shared
            .into_iter()
            .map(|t| self.index(Bucket::Overlap, std::slice::from_ref(t)))
            .collect();
        Ok([p, h, o])
    }

    pub fn featurize(&self, premise: &str, hypothesis: &str) -> Result<SparseFeatures, ModelError> {
        let mut counts = BTreeMap::new();
        for bucket in self.bucket_indices(premise, hypothesis)? {
            for idx in bucket {
                *counts.entry(idx).or_insert(0.0) += 1.0;
            }
        }
        Ok(SparseFeatures::from_counts(counts))
    }

    /// Features for a single text, placed in the premise bucket.
    pub fn featurize_single(&self, text: &str) -> Result<SparseFeatures, ModelError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(ModelError::EmptyText);
        }
        let mut indices = Vec::new();
        self.ngram_indices(Bucket::Premise, &tokens, &mut indices);
        let mut counts = BTreeMap::new();
        for idx in indices {
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
        Ok(SparseFeatures::from_counts(counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn featurizer() -> Featurizer {
        Featurizer::new(FeatureConfig::default()).unwrap()
    }

    #[test]
    fn tokenizer_strips_punctuation() {
        assert_eq!(tokenize("A dog, running!  Fast."), vec!["a", "dog", "running", "fast"]);
        assert!(tokenize(" ...  ").is_empty());
    }

    #[test]
    fn identical_texts_fill_overlap() {
        let f = featurizer();
        let [p, _, o] = f.bucket_indices("A dog runs.", "A dog runs.").unwrap();
        let unigrams: BTreeSet<u32> = tokenize("A dog runs.")
            .iter()
            .map(|t| f.index(Bucket::Overlap, std::slice::from_ref(t)))
            .collect();
        assert_eq!(o.iter().copied().collect::<BTreeSet<_>>(), unigrams);
        assert_eq!(o.len(), 3);
        assert_eq!(p.len(), 3 + 2);
    }

    #[test]
    fn disjoint_texts_count() {
        let f = featurizer();
        let [p, h, o] = f.bucket_indices("a b", "c d").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(h.len(), 3);
        assert!(o.is_empty());
        let x = f.featurize("a b", "c d").unwrap();
        assert!(x.nnz() <= 6);
        let norm: f64 = x.values.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_pinned() {
        let f = featurizer();
        let a = f.featurize("The cat sat.", "A cat is sitting").unwrap();
        assert_eq!(a, f.featurize("The cat sat.", "A cat is sitting").unwrap());
        // FNV-1a indices must not drift across releases or platforms.
        assert_eq!(f.index(Bucket::Premise, &["cat".to_string()]), 18_500);
    }

    #[test]
    fn empty_text_rejected() {
        let f = featurizer();
        assert!(matches!(f.featurize("", "x"), Err(ModelError::EmptyText)));
        assert!(matches!(f.featurize("x", "?!"), Err(ModelError::EmptyText)));
        assert!(matches!(f.featurize_single("  "), Err(ModelError::EmptyText)));
    }

    #[test]
    fn config_validation() {
        assert!(FeatureConfig::default().with_hash_dim(512).validate().is_err());
        assert!(FeatureConfig::default().with_hash_dim(3000).validate().is_err());
        let bad = FeatureConfig { ngram_orders: [3].into_iter().collect(), ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(FeatureConfig::default().ngram_mask(), 3);
        assert_eq!(FeatureConfig::from_mask(2), [2].into_iter().collect());
    }
}
