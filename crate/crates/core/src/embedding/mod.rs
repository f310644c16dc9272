//! Shared word embedding and per-platform emoji embeddings.
//!
//! The word matrix is a standard skip-gram-with-negative-sampling model
//! trained on the emoji-free union corpus. Emoji vectors are then fitted one
//! platform at a time against that matrix, which is never modified, so all
//! platforms' emoji vectors live in the same space.

mod emoji;
mod io;
mod sgns;
mod vocab;
mod word2vec;

pub use emoji::{
    emoji_counts, extract_context_pairs, train_emoji_vectors, ContextPair, EmojiEmbeddingSet,
};
pub use io::{
    read_emoji_embeddings, read_vocab_counts, read_word_embeddings, write_emoji_embeddings,
    write_vocab_counts, write_word_embeddings,
};
pub use sgns::{
    log_sigmoid, sgns_gradient, sgns_objective, sigmoid, sgns_full_gradient, sgns_full_objective,
};
pub use vocab::{build_vocab, negative_sample, UnigramSampler, Vocab, UNIGRAM_POWER};
pub use word2vec::{train_word_embedding, EmbeddingMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vocabulary is empty after applying min_count")]
    EmptyVocab,
    #[error("no emoji reaches the minimum occurrence count")]
    NoEmojis,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("full-vocabulary negatives need a vocabulary of at most {max} words, got {actual}")]
    FullVocabTooLarge { max: usize, actual: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the negative term of the emoji objective is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeMode {
    /// `negatives` draws per pair from the smoothed unigram distribution.
    #[default]
    Sampled,
    /// Every vocabulary word is a negative. Only for small vocabularies.
    FullVocab,
}

/// Largest vocabulary accepted by [`NegativeMode::FullVocab`].
pub const FULL_VOCAB_LIMIT: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    /// Context radius in tokens.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub min_count: u64,
    pub emoji_min_count: u64,
    /// Frequent-word subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
    pub negative_mode: NegativeMode,
    pub seed: u64,
    pub deterministic: bool,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 20,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            min_count: 5,
            emoji_min_count: 50,
            subsample: None,
            negative_mode: NegativeMode::Sampled,
            seed: 1,
            deterministic: true,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if let Some(t) = self.subsample {
            if t.is_nan() || t <= 0.0 {
                return bad("subsample threshold must be positive");
            }
        }
        Ok(())
    }

    /// Linearly decayed rate after `done` of `total` updates.
    pub(crate) fn rate_at(&self, done: u64, total: u64) -> f64 {
        if total == 0 {
            return self.learning_rate;
        }
        let progress = done as f64 / total as f64;
        (self.learning_rate * (1.0 - progress)).max(self.min_learning_rate)
    }

    pub(crate) fn parallel_workers(&self) -> usize {
        if self.deterministic {
            1
        } else {
            self.workers.max(1)
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a * x`
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
