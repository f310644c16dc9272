use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{cross_validate, ClassifierConfig, FoldMetrics};
use super::stats::{paired_t_test, t_test, TTestResult};
use super::EvalError;
use crate::analysis::ScoredCorpus;
use crate::corpus::Platform;
use crate::embedding::{EmbeddingMatrix, EmojiEmbeddingSet};
use crate::mapping::{apply_mapping, MappingTable};
use crate::rng::derive_seed;
use crate::sentiment::Scorer;
use crate::text::{TokenSeq, TokenizedCorpus};

pub const DEFAULT_THRESHOLDS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTweet {
    pub tokens: TokenSeq,
    pub platform: Platform,
    pub label: i8,
    pub raw_score: f64,
}

fn check_threshold(threshold: f64) -> Result<(), EvalError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(threshold))
    }
}

/// Keeps tweets whose score is at least `threshold` in magnitude and labels
/// them by its sign.
pub fn label_scored(scored: &ScoredCorpus<'_>, threshold: f64) -> Result<Vec<LabeledTweet>, EvalError> {
    check_threshold(threshold)?;
    Ok(scored
        .corpus
        .tweets
        .iter()
        .zip(&scored.scores)
        .filter(|(_, s)| s.abs() >= threshold)
        .map(|(t, &s)| LabeledTweet {
            tokens: t.clone(),
            platform: scored.platform(),
            label: if s > 0.0 { 1 } else { -1 },
            raw_score: s,
        })
        .collect())
}

pub fn label_tweets(
    corpus: &TokenizedCorpus,
    scorer: &dyn Scorer,
    threshold: f64,
) -> Result<Vec<LabeledTweet>, EvalError> {
    check_threshold(threshold)?;
    let scored = ScoredCorpus::new(corpus, scorer)?;
    label_scored(&scored, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprMode {
    Mapping,
    NoMapping,
    NoEmojis,
}

impl ReprMode {
    pub const ALL: [ReprMode; 3] = [ReprMode::Mapping, ReprMode::NoMapping, ReprMode::NoEmojis];

    pub fn name(self) -> &'static str {
        match self {
            ReprMode::Mapping => "mapping",
            ReprMode::NoMapping => "no_mapping",
            ReprMode::NoEmojis => "no_emojis",
        }
    }
}

/// Which emoji vectors the unmapped representation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoMappingVectors {
    /// The target platform's vectors for every tweet.
    #[default]
    Target,
    /// Each tweet's own platform's vectors.
    OwnPlatform,
}

/// Everything the representations need besides the tweets themselves.
///
/// `table` maps target-platform emojis to source-platform emojis and must
/// have been built on a different data partition than the one evaluated.
#[derive(Debug, Clone, Copy)]
pub struct EvalInputs<'a> {
    pub words: &'a EmbeddingMatrix,
    pub source_set: &'a EmojiEmbeddingSet,
    pub target_set: &'a EmojiEmbeddingSet,
    pub table: &'a MappingTable,
    pub mapping_partition: &'a str,
    pub eval_partition: &'a str,
}

fn mean_into<'v>(acc: &mut [f64], vectors: impl Iterator<Item = &'v [f64]>) -> usize {
    let mut n = 0;
    let mut sum = vec![0.0; acc.len()];
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        for (a, s) in acc.iter_mut().zip(sum) {
            *a += s / n as f64;
        }
    }
    n
}

/// Mean word vector plus mean emoji vector.
pub fn represent(
    tweet: &LabeledTweet,
    inputs: &EvalInputs<'_>,
    mode: ReprMode,
    no_mapping: NoMappingVectors,
) -> Result<Vec<f64>, EvalError> {
    let mut out = vec![0.0; inputs.words.dim()];
    let known = mean_into(&mut out, tweet.tokens.words().filter_map(|w| inputs.words.vector_of(w)));
    if known == 0 {
        return Err(EvalError::NoKnownWords);
    }
    let from_target = tweet.platform == inputs.target_set.platform;
    match mode {
        ReprMode::NoEmojis => {}
        ReprMode::NoMapping => {
            let set = match no_mapping {
                NoMappingVectors::Target => inputs.target_set,
                NoMappingVectors::OwnPlatform if from_target => inputs.target_set,
                NoMappingVectors::OwnPlatform => inputs.source_set,
            };
            mean_into(&mut out, tweet.tokens.emojis().filter_map(|e| set.get(e)));
        }
        ReprMode::Mapping => {
            let set = inputs.source_set;
            if from_target {
                let mapped = apply_mapping(&tweet.tokens, inputs.table);
                mean_into(&mut out, mapped.emojis().filter_map(|e| set.get(e)));
            } else {
                mean_into(&mut out, tweet.tokens.emojis().filter_map(|e| set.get(e)));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub classifier: ClassifierConfig,
    pub no_mapping: NoMappingVectors,
    pub thresholds: Vec<f64>,
    /// Pair the sweep's significance test by threshold instead of pooling
    /// fold accuracies.
    pub paired: bool,
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            seed: 1,
            classifier: ClassifierConfig::default(),
            no_mapping: NoMappingVectors::default(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            paired: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub source: Platform,
    pub target: Platform,
    pub threshold: f64,
    pub examples: usize,
    /// Labeled tweets dropped because none of their words are in the vocabulary.
    pub skipped: usize,
    pub mapping: Vec<FoldMetrics>,
    pub no_mapping: Vec<FoldMetrics>,
    pub no_emojis: Vec<FoldMetrics>,
    /// Mean NoMapping accuracy.
    pub a1: f64,
    /// Mean Mapping accuracy.
    pub a2: f64,
    pub delta: f64,
    pub no_emojis_accuracy: f64,
}

impl ComparisonReport {
    pub fn folds(&self, mode: ReprMode) -> &[FoldMetrics] {
        match mode {
            ReprMode::Mapping => &self.mapping,
            ReprMode::NoMapping => &self.no_mapping,
            ReprMode::NoEmojis => &self.no_emojis,
        }
    }

    pub fn mean_accuracy(&self, mode: ReprMode) -> f64 {
        mean_accuracy(self.folds(mode))
    }
}

fn mean_accuracy(folds: &[FoldMetrics]) -> f64 {
    folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len().max(1) as f64
}

/// Cross-validates all three representations on the mixed labeled tweets of
/// both platforms, with identical folds for each.
pub fn compare_pair(
    source: &ScoredCorpus<'_>,
    target: &ScoredCorpus<'_>,
    threshold: f64,
    inputs: &EvalInputs<'_>,
    config: &EvalConfig,
) -> Result<ComparisonReport, EvalError> {
    if inputs.mapping_partition == inputs.eval_partition {
        return Err(EvalError::Leakage(inputs.mapping_partition.to_string()));
    }
    if inputs.table.source_platform != target.platform()
        || inputs.table.target_platform != source.platform()
    {
        return Err(EvalError::PlatformMismatch(format!(
            "table maps {} to {}, evaluation needs {} to {}",
            inputs.table.source_platform,
            inputs.table.target_platform,
            target.platform(),
            source.platform()
        )));
    }
    if inputs.source_set.platform != source.platform()
        || inputs.target_set.platform != target.platform()
    {
        return Err(EvalError::PlatformMismatch(
            "emoji sets do not match the corpora's platforms".into(),
        ));
    }
    let mut labeled = label_scored(source, threshold)?;
    labeled.extend(label_scored(target, threshold)?);

    let mut per_mode: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 3];
    let mut ys = Vec::new();
    let mut skipped = 0;
    for tweet in &labeled {
        match represent(tweet, inputs, ReprMode::NoEmojis, config.no_mapping) {
            Err(EvalError::NoKnownWords) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
            Ok(_) => {}
        }
        for (k, mode) in ReprMode::ALL.into_iter().enumerate() {
            per_mode[k].push(represent(tweet, inputs, mode, config.no_mapping)?);
        }
        ys.push(tweet.label);
    }

    let seed = derive_seed(config.seed, &[threshold.to_bits()]);
    let mut results = Vec::with_capacity(3);
    for xs in &per_mode {
        results.push(cross_validate(xs, &ys, config.folds, seed, &config.classifier)?);
    }
    let no_emojis = results.pop().expect("three modes");
    let no_mapping = results.pop().expect("three modes");
    let mapping = results.pop().expect("three modes");
    let a1 = mean_accuracy(&no_mapping);
    let a2 = mean_accuracy(&mapping);
    Ok(ComparisonReport {
        source: source.platform(),
        target: target.platform(),
        threshold,
        examples: ys.len(),
        skipped,
        a1,
        a2,
        delta: a2 - a1,
        no_emojis_accuracy: mean_accuracy(&no_emojis),
        mapping,
        no_mapping,
        no_emojis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One comparison per threshold; a failing threshold is recorded and the
/// sweep goes on.
pub fn threshold_sweep(
    source: &ScoredCorpus<'_>,
    target: &ScoredCorpus<'_>,
    thresholds: &[f64],
    inputs: &EvalInputs<'_>,
    config: &EvalConfig,
) -> Result<Vec<SweepEntry>, EvalError> {
    let run = |&threshold: &f64| match compare_pair(source, target, threshold, inputs, config) {
        Ok(r) => SweepEntry {
            threshold,
            report: Some(r),
            error: None,
        },
        Err(e) => SweepEntry {
            threshold,
            report: None,
            error: Some(e.to_string()),
        },
    };
    if config.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
        Ok(pool.install(|| thresholds.par_iter().map(run).collect()))
    } else {
        Ok(thresholds.iter().map(run).collect())
    }
}

/// Mapping against NoMapping accuracies over a sweep: Welch on the pooled
/// fold accuracies, or paired on per-threshold means.
pub fn sweep_significance(entries: &[SweepEntry], paired: bool) -> Result<TTestResult, EvalError> {
    let reports: Vec<&ComparisonReport> = entries.iter().filter_map(|e| e.report.as_ref()).collect();
    if paired {
        let a: Vec<f64> = reports.iter().map(|r| r.a2).collect();
        let b: Vec<f64> = reports.iter().map(|r| r.a1).collect();
        paired_t_test(&a, &b)
    } else {
        let a: Vec<f64> = reports.iter().flat_map(|r| r.mapping.iter().map(|f| f.accuracy)).collect();
        let b: Vec<f64> = reports.iter().flat_map(|r| r.no_mapping.iter().map(|f| f.accuracy)).collect();
        t_test(&a, &b)
    }
}

pub fn write_comparisons_csv<W: Write>(reports: &[&ComparisonReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "source,target,threshold,mode,fold,accuracy,f1")?;
    for r in reports {
        for mode in ReprMode::ALL {
            for f in r.folds(mode) {
                writeln!(
                    out,
                    "{},{},{},{},{},{:.6},{:.6}",
                    r.source,
                    r.target,
                    r.threshold,
                    mode.name(),
                    f.fold,
                    f.accuracy,
                    f.f1_positive
                )?;
            }
        }
    }
    Ok(())
}
