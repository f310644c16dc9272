//! Sentiment-classification harness: label tweets by lexicon score, build
//! tweet vectors with and without the emoji mapping, cross-validate a linear
//! classifier and test whether the mapping helps.

mod classifier;
mod harness;
mod stats;

pub use classifier::{
    compute_metrics, cross_validate, stratified_folds, train_linear_classifier, ClassifierConfig,
    FoldMetrics, LinearModel, Metrics,
};
pub use harness::{
    compare_pair, label_scored, label_tweets, represent, sweep_significance, threshold_sweep,
    write_comparisons_csv, ComparisonReport, EvalConfig, EvalInputs, LabeledTweet,
    NoMappingVectors, ReprMode, SweepEntry, DEFAULT_THRESHOLDS,
};
pub use stats::{paired_t_test, t_test, TTestResult};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::sentiment::SentimentError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("tweet has no in-vocabulary words")]
    NoKnownWords,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("too few examples: {0}")]
    TooFewExamples(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("mapping was built on partition `{0}`, which is also the evaluation partition")]
    Leakage(String),
    #[error("platform mismatch: {0}")]
    PlatformMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
