//! Hashed bag-of-n-grams classifier trained against soft or one-hot targets.

pub mod features;
pub mod io;
pub mod network;
pub mod optim;
pub mod train;

pub use features::{FeatureConfig, Featurizer, SparseFeatures};
pub use network::{ClassifierModel, Gradients, DEFAULT_HIDDEN};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{predict, train, EpochRecord, Prediction, TrainConfig, TrainOutcome, Trainer};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("text has no tokens after lowercasing and splitting")]
    EmptyText,
    #[error("feature index {index} out of range for hash_dim {dim}")]
    DimensionMismatch { index: usize, dim: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus has no usable training examples")]
    EmptyCorpus,
    #[error("example '{uid}' has no {mode} target")]
    TargetModeMismatch { uid: String, mode: &'static str },
    #[error("example '{uid}': {source}")]
    Example { uid: String, source: Box<ModelError> },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
