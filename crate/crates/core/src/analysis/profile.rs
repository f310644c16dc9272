use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_mean, BootstrapMode};
use super::AnalysisError;
use crate::corpus::Platform;
use crate::rng::rng_from;
use crate::sentiment::Scorer;
use crate::text::{strip_emojis, Emoji, TokenizedCorpus};

/// A tokenized corpus with each tweet's emoji-free sentiment score.
#[derive(Debug, Clone)]
pub struct ScoredCorpus<'a> {
    pub corpus: &'a TokenizedCorpus,
    pub scores: Vec<f64>,
}

impl<'a> ScoredCorpus<'a> {
    pub fn new(corpus: &'a TokenizedCorpus, scorer: &dyn Scorer) -> Result<Self, AnalysisError> {
        let stripped: Vec<_> = corpus.tweets.iter().map(strip_emojis).collect();
        let scores = scorer
            .score_all(&stripped)?
            .into_iter()
            .map(|s| s.value())
            .collect();
        Ok(ScoredCorpus { corpus, scores })
    }

    /// Wrap precomputed scores, one per tweet.
    pub fn from_scores(corpus: &'a TokenizedCorpus, scores: Vec<f64>) -> Self {
        assert_eq!(corpus.len(), scores.len(), "one score per tweet");
        ScoredCorpus { corpus, scores }
    }

    pub fn platform(&self) -> Platform {
        self.corpus.platform
    }

    /// Scores of the tweets containing `emoji`.
    pub fn scores_with(&self, emoji: &Emoji) -> Vec<f64> {
        self.corpus
            .tweets
            .iter()
            .zip(&self.scores)
            .filter(|(t, _)| t.contains_emoji(emoji))
            .map(|(_, &s)| s)
            .collect()
    }
}

/// Mean sentiment of every tweet on the platform.
pub fn platform_bias(scored: &ScoredCorpus<'_>) -> Result<f64, AnalysisError> {
    if scored.scores.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    Ok(scored.scores.iter().sum::<f64>() / scored.scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub bootstrap: BootstrapMode,
    /// Two-sided interval coverage.
    pub level: f64,
    pub seed: u64,
    /// Emojis seen in fewer tweets than this are not profiled.
    pub min_tweets: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            bootstrap: BootstrapMode::Resample(100),
            level: 0.95,
            seed: 1,
            min_tweets: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentProfile {
    pub platform: Platform,
    pub emoji: Emoji,
    pub mean_adjusted: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Bias-corrected sentiment of one emoji on one platform.
///
/// The bootstrap resamples tweets containing the emoji; its stream is seeded
/// by `(seed, platform, emoji)` so profiles can be computed in any order.
pub fn emoji_sentiment_profile(
    scored: &ScoredCorpus<'_>,
    emoji: &Emoji,
    bias: f64,
    config: &ProfileConfig,
) -> Result<SentimentProfile, AnalysisError> {
    let scores = scored.scores_with(emoji);
    if scores.is_empty() {
        return Err(AnalysisError::EmojiAbsent(emoji.label()));
    }
    let mut rng = rng_from(
        config.seed,
        &[scored.platform().stream_id(), emoji.stream_id()],
    );
    // Adjust before resampling so the whole profile, not only its mean, is
    // unaffected by a platform-wide offset.
    let adjusted: Vec<f64> = scores.iter().map(|s| s - bias).collect();
    let summary = bootstrap_mean(&adjusted, config.bootstrap, config.level, &mut rng)?;
    Ok(SentimentProfile {
        platform: scored.platform(),
        emoji: emoji.clone(),
        mean_adjusted: summary.mean,
        variance: summary.variance,
        ci_low: summary.ci_low,
        ci_high: summary.ci_high,
        n: scores.len(),
    })
}

/// Profiles every emoji on every platform, platforms in the given order and
/// emojis in codepoint order.
pub fn profile_all(
    corpora: &[ScoredCorpus<'_>],
    config: &ProfileConfig,
) -> Result<Vec<SentimentProfile>, AnalysisError> {
    let mut out = Vec::new();
    for scored in corpora {
        let bias = platform_bias(scored)?;
        let emojis: BTreeSet<&Emoji> = scored
            .corpus
            .tweets
            .iter()
            .flat_map(|t| t.emojis())
            .collect();
        for emoji in emojis {
            let n = scored.corpus.tweets.iter().filter(|t| t.contains_emoji(emoji)).count();
            if n < config.min_tweets.max(1) {
                continue;
            }
            out.push(emoji_sentiment_profile(scored, emoji, bias, config)?);
        }
    }
    Ok(out)
}

pub fn write_profiles_csv<W: Write>(profiles: &[SentimentProfile], mut out: W) -> std::io::Result<()> {
    writeln!(out, "platform,emoji,mean,var,ci_low,ci_high,n")?;
    for p in profiles {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            p.platform,
            p.emoji.label(),
            p.mean_adjusted,
            p.variance,
            p.ci_low,
            p.ci_high,
            p.n
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{Token, TokenSeq};

    fn e() -> Emoji {
        Emoji::from_char('😨')
    }

    fn corpus(n_with: usize, n_without: usize) -> TokenizedCorpus {
        let mut tweets = Vec::new();
        for i in 0..n_with {
            tweets.push(TokenSeq::new(vec![Token::Word(format!("w{i}")), Token::Emoji(e())]));
        }
        for i in 0..n_without {
            tweets.push(TokenSeq::new(vec![Token::Word(format!("v{i}"))]));
        }
        TokenizedCorpus::new(Platform::Windows, tweets)
    }

    #[test]
    fn bias_is_the_mean_score() {
        let c = corpus(2, 0);
        assert_eq!(platform_bias(&ScoredCorpus::from_scores(&c, vec![0.2, 0.2])).unwrap(), 0.2);
        let b = platform_bias(&ScoredCorpus::from_scores(&c, vec![0.4, 0.0])).unwrap();
        assert!((b - 0.2).abs() < 1e-15);
        let empty = TokenizedCorpus::new(Platform::Ios, vec![]);
        assert!(matches!(
            platform_bias(&ScoredCorpus::from_scores(&empty, vec![])),
            Err(AnalysisError::EmptyCorpus)
        ));
    }

    #[test]
    fn constant_sample_profile() {
        let c = corpus(4, 2);
        let scored = ScoredCorpus::from_scores(&c, vec![0.5, 0.5, 0.5, 0.5, -1.0, 1.0]);
        let p = emoji_sentiment_profile(&scored, &e(), 0.2, &ProfileConfig::default()).unwrap();
        assert!((p.mean_adjusted - 0.3).abs() < 1e-15);
        assert_eq!(p.variance, 0.0);
        assert_eq!(p.ci_high - p.ci_low, 0.0);
        assert_eq!(p.n, 4);
    }

    #[test]
    fn bias_shift_invariance() {
        let c = corpus(5, 3);
        let scores = vec![0.1, -0.3, 0.8, 0.0, 0.45, 0.2, -0.5, 0.9];
        let shift = 0.125;
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let a = ScoredCorpus::from_scores(&c, scores);
        let b = ScoredCorpus::from_scores(&c, shifted);
        let cfg = ProfileConfig {
            bootstrap: BootstrapMode::Exhaustive,
            ..ProfileConfig::default()
        };
        let pa = profile_all(&[a], &cfg).unwrap();
        let pb = profile_all(&[b], &cfg).unwrap();
        assert!((pa[0].mean_adjusted - pb[0].mean_adjusted).abs() < 1e-12);
        assert!((pa[0].ci_low - pb[0].ci_low).abs() < 1e-12);
    }

    #[test]
    fn absent_emoji() {
        let c = corpus(0, 3);
        let scored = ScoredCorpus::from_scores(&c, vec![0.0; 3]);
        assert!(matches!(
            emoji_sentiment_profile(&scored, &e(), 0.0, &ProfileConfig::default()),
            Err(AnalysisError::EmojiAbsent(_))
        ));
        assert!(profile_all(&[scored], &ProfileConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn csv_layout() {
        let c = corpus(2, 0);
        let scored = ScoredCorpus::from_scores(&c, vec![0.5, 0.5]);
        let p = profile_all(&[scored], &ProfileConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_profiles_csv(&p, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "platform,emoji,mean,var,ci_low,ci_high,n\nWindows,U+1F628,0.000000,0.000000,0.000000,0.000000,2\n"
        );
    }
}
