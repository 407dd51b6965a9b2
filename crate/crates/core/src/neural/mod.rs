//! The trainable network, its losses and the training loop.
//!
//! All arithmetic is `f64`. Each block exposes `forward` returning a cache
//! and `backward` accumulating into a gradient value of the block's own type.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod perceiver;
pub mod ple;
pub mod pool;
pub mod train;

use std::path::PathBuf;

use thiserror::Error;

use crate::category::Category;
use crate::features::FeatureBundle;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{check_input, check_params, rel_error, GradCheck, FD_STEP};
pub use layers::{gelu, Attention, FeedForward, LayerNorm, Linear, Params, LAYER_NORM_EPS};
pub use loss::{ccc, ccc_loss, weighted_ce, SoftTarget, SOFT_TARGET_TOLERANCE};
pub use lstm::{Lstm, LstmLayer};
pub use model::{Buffers, EmbedBranch, ForwardCache, Model, ModelConfig, ModelParams, Task};
pub use perceiver::Perceiver;
pub use ple::{Ple, PleEdges};
pub use pool::{AttentivePool, STD_FLOOR};
pub use train::{
    batch_loss, class_weights, evaluate, predict, train, train_model, train_with, write_history, Adam, ClassWeighting, EpochStats, LossKind,
    Predictions, TrainConfig, TrainOutcome,
};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("{0}")]
    Unfitted(&'static str),
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    EmptySequence(&'static str),
    #[error("distribution is off the simplex (sum {0})")]
    OffSimplex(f64),
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("target does not fit the task: {0}")]
    Target(String),
    #[error("empty training set")]
    EmptyDataset,
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A training target. `Class` is a one-hot special case of `Soft`.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(Category),
    Soft(SoftTarget),
    Attributes([f64; 3]),
}

impl Target {
    /// The hard class used for counting and accuracy, if categorical.
    pub fn class(&self) -> Option<Category> {
        match self {
            Target::Class(c) => Some(*c),
            Target::Soft(s) => Some(s.argmax()),
            Target::Attributes(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainExample {
    pub bundle: FeatureBundle,
    pub target: Target,
}
