//! Measurements of how differently platforms use the same emoji:
//! neighbour-word overlap between platform embeddings, bias-corrected
//! sentiment profiles with bootstrap intervals, and the share of emojis and
//! tweets affected by significant cross-platform differences.

mod bootstrap;
mod divergence;
mod overlap;
mod profile;

pub use bootstrap::{bootstrap_mean, BootstrapError, BootstrapMode, BootstrapSummary, MAX_EXHAUSTIVE};
pub use divergence::{
    divergence_report, DivergenceReport, EmojiDivergence, PairFlag, SignificanceRule,
};
pub use overlap::{jaccard, neighbor_overlap_matrix, random_sample_corpus, OverlapMatrix};
pub use profile::{
    emoji_sentiment_profile, platform_bias, profile_all, write_profiles_csv, ProfileConfig,
    ScoredCorpus, SentimentProfile,
};

use thiserror::Error;

use crate::mapping::MappingError;
use crate::sentiment::SentimentError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("Jaccard coefficient of two empty sets")]
    BothEmpty,
    #[error("need at least two platforms, got {0}")]
    TooFewPlatforms(usize),
    #[error("`{0}` and `{1}` share no emojis")]
    NoSharedEmojis(String, String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("emoji {0} does not occur in the corpus")]
    EmojiAbsent(String),
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
