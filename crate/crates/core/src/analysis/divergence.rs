use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::profile::{platform_bias, ScoredCorpus, SentimentProfile};
use super::AnalysisError;
use crate::corpus::Platform;
use crate::eval::t_test;
use crate::text::{Emoji, TokenSeq};

/// When two platforms' profiles of an emoji count as different.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum SignificanceRule {
    /// The two percentile intervals do not overlap.
    #[default]
    CiDisjoint,
    /// Welch two-sample test on bias-adjusted per-tweet scores.
    Welch { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFlag {
    pub a: Platform,
    pub b: Platform,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmojiDivergence {
    pub emoji: Emoji,
    pub pairs: Vec<PairFlag>,
}

impl EmojiDivergence {
    pub fn divergent(&self) -> bool {
        self.pairs.iter().any(|p| p.divergent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub emojis: Vec<EmojiDivergence>,
    /// Share of profiled emojis flagged for at least one platform pair.
    pub divergent_fraction: f64,
    /// Share of tweets in the profiled corpora containing a flagged emoji.
    pub tweet_fraction: f64,
    /// Same share measured on a background sample, when one is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_fraction: Option<f64>,
}

impl DivergenceReport {
    pub fn flagged(&self) -> BTreeSet<&Emoji> {
        self.emojis.iter().filter(|e| e.divergent()).map(|e| &e.emoji).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn fraction_containing(tweets: &[&TokenSeq], flagged: &BTreeSet<&Emoji>) -> f64 {
    if tweets.is_empty() {
        return 0.0;
    }
    let hit = tweets
        .iter()
        .filter(|t| t.emojis().any(|e| flagged.contains(e)))
        .count();
    hit as f64 / tweets.len() as f64
}

/// Flags every emoji profiled on two or more platforms, pair by pair.
///
/// Emojis profiled on a single platform count in the denominator of
/// `divergent_fraction` but can never be flagged.
pub fn divergence_report(
    profiles: &[SentimentProfile],
    corpora: &[ScoredCorpus<'_>],
    rule: SignificanceRule,
    background: Option<&[TokenSeq]>,
) -> Result<DivergenceReport, AnalysisError> {
    let platforms: BTreeSet<Platform> = profiles.iter().map(|p| p.platform).collect();
    if platforms.len() < 2 {
        return Err(AnalysisError::TooFewPlatforms(platforms.len()));
    }

    let mut by_emoji: BTreeMap<&Emoji, Vec<&SentimentProfile>> = BTreeMap::new();
    for p in profiles {
        by_emoji.entry(&p.emoji).or_default().push(p);
    }

    let mut biases = BTreeMap::new();
    if matches!(rule, SignificanceRule::Welch { .. }) {
        for c in corpora {
            biases.insert(c.platform(), platform_bias(c)?);
        }
    }
    let adjusted = |platform: Platform, emoji: &Emoji| -> Option<Vec<f64>> {
        let corpus = corpora.iter().find(|c| c.platform() == platform)?;
        let bias = biases[&platform];
        Some(corpus.scores_with(emoji).into_iter().map(|s| s - bias).collect())
    };

    let mut emojis = Vec::with_capacity(by_emoji.len());
    for (emoji, mut group) in by_emoji {
        group.sort_by_key(|p| p.platform);
        let mut pairs = Vec::new();
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                let divergent = match rule {
                    SignificanceRule::CiDisjoint => a.ci_high < b.ci_low || b.ci_high < a.ci_low,
                    SignificanceRule::Welch { alpha } => {
                        match (adjusted(a.platform, emoji), adjusted(b.platform, emoji)) {
                            (Some(xa), Some(xb)) => {
                                t_test(&xa, &xb).map(|r| r.p_value < alpha).unwrap_or(false)
                            }
                            _ => false,
                        }
                    }
                };
                pairs.push(PairFlag {
                    a: a.platform,
                    b: b.platform,
                    divergent,
                });
            }
        }
        emojis.push(EmojiDivergence {
            emoji: emoji.clone(),
            pairs,
        });
    }

    let n_flagged = emojis.iter().filter(|e| e.divergent()).count();
    let divergent_fraction = if emojis.is_empty() {
        0.0
    } else {
        n_flagged as f64 / emojis.len() as f64
    };
    let mut report = DivergenceReport {
        emojis,
        divergent_fraction,
        tweet_fraction: 0.0,
        sample_fraction: None,
    };
    let flagged = report.flagged();
    let dataset: Vec<&TokenSeq> = corpora.iter().flat_map(|c| c.corpus.tweets.iter()).collect();
    let tweet_fraction = fraction_containing(&dataset, &flagged);
    let sample_fraction = background.map(|bg| {
        let tweets: Vec<&TokenSeq> = bg.iter().collect();
        fraction_containing(&tweets, &flagged)
    });
    drop(flagged);
    report.tweet_fraction = tweet_fraction;
    report.sample_fraction = sample_fraction;
    Ok(report)
}
