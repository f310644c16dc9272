//! Synthetic corpora with planted emoji correspondences.
//!
//! Every emoji on the reference platform (the first one listed) stands for
//! one "meaning": a pool of topic words with a polarity. On every other
//! platform an emoji may stand for a different meaning; the ground-truth
//! mapping sends it to the reference emoji with that meaning. A tweet holds
//! one roster emoji, one lexicon word whose sign is the tweet's label, and
//! filler or topic words.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Platform, PlatformCorpus, Tweet};
use crate::mapping::{MappingEntry, MappingTable};
use crate::rng::{label_hash, rng_from};
use crate::sentiment::Lexicon;
use crate::text::{Emoji, EmojiInventory};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    SpecInvalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How emojis on non-reference platforms relate to reference meanings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correspondence {
    Identity,
    /// A seeded random derangement.
    Permuted,
    /// Emoji `2k` takes meaning `2k + 1` and vice versa; adjacent meanings
    /// have opposite polarity, so every emoji flips sentiment.
    SwapPairs,
    /// `explicit[i]` is the meaning of emoji `i`.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformCount {
    pub platform: Platform,
    pub tweets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub vocab_size: usize,
    /// The first entry is the reference platform.
    pub platforms: Vec<PlatformCount>,
    /// Roster size, taken from the start of the emoji inventory.
    pub emojis: usize,
    pub correspondence: Correspondence,
    /// Topic words per meaning.
    pub pool_size: usize,
    /// Chance that a non-sentiment word comes from the emoji's topic pool.
    pub pool_prob: f64,
    /// Lexicon words, half positive and half negative.
    pub sentiment_words: usize,
    /// Chance that a tweet's label agrees with its meaning's polarity.
    pub label_agreement: f64,
    /// Chance that the lexicon word has the opposite sign and is preceded by
    /// a negator, so the word alone does not reveal the label.
    pub negation_prob: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            vocab_size: 5000,
            platforms: vec![
                PlatformCount { platform: Platform::Ios, tweets: 10_000 },
                PlatformCount { platform: Platform::Android, tweets: 10_000 },
            ],
            emojis: 20,
            correspondence: Correspondence::Permuted,
            pool_size: 40,
            pool_prob: 0.5,
            sentiment_words: 100,
            label_agreement: 0.9,
            negation_prob: 0.0,
            min_len: 6,
            max_len: 14,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn reference(&self) -> Option<Platform> {
        self.platforms.first().map(|p| p.platform)
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::SpecInvalid(m));
        if self.platforms.is_empty() {
            return bad("at least one platform is required".into());
        }
        let mut seen = Vec::new();
        for p in &self.platforms {
            if p.platform == Platform::Unknown {
                return bad("synthetic tweets need a named platform".into());
            }
            if seen.contains(&p.platform) {
                return bad(format!("platform {} listed twice", p.platform));
            }
            seen.push(p.platform);
        }
        if self.emojis < 2 {
            return bad("roster needs at least 2 emojis".into());
        }
        let inventory = EmojiInventory::builtin().len();
        if self.emojis > inventory {
            return bad(format!("roster of {} exceeds the {inventory}-emoji inventory", self.emojis));
        }
        if self.pool_size == 0 || self.sentiment_words < 2 {
            return bad("pool_size must be positive and sentiment_words at least 2".into());
        }
        let reserved = self.emojis * self.pool_size + self.sentiment_words;
        if self.vocab_size <= reserved {
            return bad(format!(
                "vocab_size {} leaves no filler words after {reserved} topic and sentiment words",
                self.vocab_size
            ));
        }
        if [self.pool_prob, self.label_agreement, self.negation_prob]
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return bad("pool_prob, label_agreement and negation_prob must lie in [0, 1]".into());
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("need 1 <= min_len <= max_len".into());
        }
        if let Correspondence::Explicit(perm) = &self.correspondence {
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            if sorted != (0..self.emojis).collect::<Vec<_>>() {
                return bad("explicit correspondence must be a permutation of the roster".into());
            }
        }
        if self.correspondence == Correspondence::SwapPairs && self.emojis % 2 == 1 {
            return bad("swap-pairs needs an even roster".into());
        }
        Ok(())
    }
}

/// Inserted before a negated lexicon word.
pub const NEGATOR: &str = "not";

/// Word name for vocabulary index `i`.
pub fn word_name(i: usize) -> String {
    format!("w{i:04}")
}

/// Source string the default source table maps to `platform`.
pub fn canonical_source(platform: Platform) -> &'static str {
    match platform {
        Platform::Android => "Twitter for Android",
        Platform::Ios => "Twitter for iPhone",
        Platform::Twitter => "Twitter Web Client",
        Platform::Windows => "Twitter for Windows Phone",
        Platform::Unknown => "unknown",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meaning {
    pub pool: Vec<usize>,
    pub polarity: f64,
}

/// The structure shared by every draw from one spec.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthPlan {
    pub roster: Vec<Emoji>,
    pub meanings: Vec<Meaning>,
    /// Per platform, the meaning of each roster emoji.
    pub assignment: BTreeMap<Platform, Vec<usize>>,
    /// Lexicon words (vocabulary indices) with their polarity.
    pub sentiment: Vec<(usize, f64)>,
    pub filler: Vec<usize>,
}

impl SynthPlan {
    pub fn new(spec: &SynthSpec) -> Result<Self, SynthError> {
        spec.validate()?;
        let roster: Vec<Emoji> = EmojiInventory::builtin().iter().take(spec.emojis).cloned().collect();
        let meanings: Vec<Meaning> = (0..spec.emojis)
            .map(|m| Meaning {
                pool: (m * spec.pool_size..(m + 1) * spec.pool_size).collect(),
                polarity: if m % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect();
        let base = spec.emojis * spec.pool_size;
        let half = spec.sentiment_words / 2;
        let mut sentiment = Vec::with_capacity(2 * half);
        for k in 0..half {
            // Magnitudes spread evenly over [0.2, 1.0].
            let magnitude = 0.2 + 0.8 * (k as f64 + 0.5) / half as f64;
            sentiment.push((base + 2 * k, magnitude));
            sentiment.push((base + 2 * k + 1, -magnitude));
        }
        let filler = (base + 2 * half..spec.vocab_size).collect();

        let mut rng = rng_from(spec.seed, &[label_hash("plan")]);
        let n = spec.emojis;
        let other: Vec<usize> = match &spec.correspondence {
            Correspondence::Identity => (0..n).collect(),
            Correspondence::SwapPairs => (0..n).map(|i| i ^ 1).collect(),
            Correspondence::Explicit(p) => p.clone(),
            Correspondence::Permuted => loop {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                if p.iter().enumerate().all(|(i, &m)| i != m) {
                    break p;
                }
            },
        };
        let mut assignment = BTreeMap::new();
        for (k, p) in spec.platforms.iter().enumerate() {
            let a = if k == 0 { (0..n).collect() } else { other.clone() };
            assignment.insert(p.platform, a);
        }
        Ok(SynthPlan {
            roster,
            meanings,
            assignment,
            sentiment,
            filler,
        })
    }

    /// Roster emojis whose meaning on `platform` differs from the reference.
    pub fn divergent(&self, platform: Platform) -> Vec<&Emoji> {
        match self.assignment.get(&platform) {
            Some(a) => a
                .iter()
                .enumerate()
                .filter(|(i, m)| i != *m)
                .map(|(i, _)| &self.roster[i])
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn lexicon(&self) -> Lexicon {
        let mut lex = Lexicon::new();
        for &(w, p) in &self.sentiment {
            lex.insert(&word_name(w), p).expect("polarities lie in [-1, 1]");
        }
        lex
    }

    /// Ground truth from `platform` to the reference platform.
    pub fn truth(&self, platform: Platform, reference: Platform) -> Option<MappingTable> {
        let a = self.assignment.get(&platform)?;
        let entries = a
            .iter()
            .enumerate()
            .map(|(i, &m)| MappingEntry {
                source_emoji: self.roster[i].clone(),
                target_emoji: self.roster[m].clone(),
                similarity: 1.0,
            })
            .collect();
        Some(MappingTable::from_entries(platform, reference, entries).expect("roster is closed"))
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub plan: SynthPlan,
    pub corpora: BTreeMap<Platform, PlatformCorpus>,
    /// Per non-reference platform, its mapping onto the reference platform.
    pub truth: BTreeMap<Platform, MappingTable>,
    pub lexicon: Lexicon,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    generate_tagged(spec, "")
}

/// Like [`generate`], but tweets are drawn from a stream keyed by `tag`, so
/// differently tagged draws share the plan and nothing else.
pub fn generate_tagged(spec: &SynthSpec, tag: &str) -> Result<SynthOutput, SynthError> {
    let plan = SynthPlan::new(spec)?;
    let reference = spec.reference().expect("validated");
    let names: Vec<String> = (0..spec.vocab_size).map(word_name).collect();
    let positive: Vec<usize> = plan.sentiment.iter().filter(|s| s.1 > 0.0).map(|s| s.0).collect();
    let negative: Vec<usize> = plan.sentiment.iter().filter(|s| s.1 < 0.0).map(|s| s.0).collect();

    let mut corpora = BTreeMap::new();
    for pc in &spec.platforms {
        let assignment = &plan.assignment[&pc.platform];
        let mut rng = rng_from(
            spec.seed,
            &[label_hash("tweets"), label_hash(tag), pc.platform.stream_id()],
        );
        let mut corpus = PlatformCorpus::new(pc.platform);
        corpus.tweets.reserve(pc.tweets);
        for i in 0..pc.tweets {
            let e = rng.random_range(0..plan.roster.len());
            let meaning = &plan.meanings[assignment[e]];
            let agree = rng.random::<f64>() < spec.label_agreement;
            let positive_label = (meaning.polarity > 0.0) == agree;
            let negated = rng.random::<f64>() < spec.negation_prob;
            let class = if positive_label != negated { &positive } else { &negative };
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let sentiment_at = rng.random_range(0..len);
            let mut words: Vec<&str> = Vec::with_capacity(len + 2);
            for k in 0..len {
                if k == sentiment_at && negated {
                    words.push(NEGATOR);
                }
                let w = if k == sentiment_at {
                    class[rng.random_range(0..class.len())]
                } else if rng.random::<f64>() < spec.pool_prob {
                    meaning.pool[rng.random_range(0..meaning.pool.len())]
                } else {
                    plan.filler[rng.random_range(0..plan.filler.len())]
                };
                words.push(&names[w]);
            }
            let emoji_at = rng.random_range(0..=words.len());
            words.insert(emoji_at, plan.roster[e].as_str());
            corpus.tweets.push(Tweet {
                id: if tag.is_empty() {
                    format!("{}-{i}", pc.platform)
                } else {
                    format!("{tag}-{}-{i}", pc.platform)
                },
                text: words.join(" "),
                source: canonical_source(pc.platform).to_string(),
                platform: pc.platform,
            });
        }
        corpora.insert(pc.platform, corpus);
    }

    let truth = spec.platforms[1..]
        .iter()
        .map(|p| (p.platform, plan.truth(p.platform, reference).expect("planned platform")))
        .collect();
    let lexicon = plan.lexicon();
    Ok(SynthOutput {
        plan,
        corpora,
        truth,
        lexicon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceTable;
    use crate::sentiment::score;
    use crate::text::{strip_emojis, TokenizeConfig, Tokenizer};

    fn small(correspondence: Correspondence) -> SynthSpec {
        SynthSpec {
            vocab_size: 300,
            platforms: vec![
                PlatformCount { platform: Platform::Ios, tweets: 200 },
                PlatformCount { platform: Platform::Android, tweets: 150 },
            ],
            emojis: 4,
            correspondence,
            pool_size: 10,
            sentiment_words: 20,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn swapped_pair_ground_truth() {
        let spec = SynthSpec { emojis: 2, ..small(Correspondence::SwapPairs) };
        let out = generate(&spec).unwrap();
        let t = &out.truth[&Platform::Android];
        let (x, y) = (&out.plan.roster[0], &out.plan.roster[1]);
        assert_eq!(t.get(x), Some(y));
        assert_eq!(t.get(y), Some(x));
        assert_eq!(t.source_platform, Platform::Android);
        assert_eq!(t.target_platform, Platform::Ios);
        assert_eq!(out.plan.divergent(Platform::Android).len(), 2);
    }

    #[test]
    fn identity_correspondence() {
        let out = generate(&small(Correspondence::Identity)).unwrap();
        let t = &out.truth[&Platform::Android];
        assert!(t.entries().all(|e| e.source_emoji == e.target_emoji));
        assert!(out.plan.divergent(Platform::Android).is_empty());
    }

    #[test]
    fn permuted_is_a_derangement() {
        let out = generate(&small(Correspondence::Permuted)).unwrap();
        assert!(out.truth[&Platform::Android].entries().all(|e| e.source_emoji != e.target_emoji));
    }

    #[test]
    fn deterministic_and_tag_sensitive() {
        let spec = small(Correspondence::Permuted);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.corpora, b.corpora);
        let c = generate_tagged(&spec, "late").unwrap();
        assert_ne!(a.corpora[&Platform::Ios].tweets[0].text, c.corpora[&Platform::Ios].tweets[0].text);
        assert_eq!(a.plan, c.plan);
    }

    #[test]
    fn counts_and_one_emoji_per_tweet() {
        let spec = small(Correspondence::Permuted);
        let out = generate(&spec).unwrap();
        let tok = Tokenizer::new(TokenizeConfig::without_stopwords(), EmojiInventory::builtin());
        for pc in &spec.platforms {
            let corpus = &out.corpora[&pc.platform];
            assert_eq!(corpus.len(), pc.tweets);
            for t in &corpus.tweets {
                assert_eq!(SourceTable::default().detect(&t.source), pc.platform);
                let seq = tok.tokenize(&t.text);
                assert_eq!(seq.emoji_count(), 1);
                let n = seq.words().filter(|w| *w != NEGATOR).count();
                assert!((spec.min_len..=spec.max_len).contains(&n));
            }
        }
    }

    #[test]
    fn planted_labels_survive_threshold() {
        let spec = SynthSpec { negation_prob: 0.5, ..small(Correspondence::Permuted) };
        let out = generate(&spec).unwrap();
        let tok = Tokenizer::new(TokenizeConfig::without_stopwords(), EmojiInventory::builtin());
        for t in &out.corpora[&Platform::Ios].tweets {
            let s = score(&strip_emojis(&tok.tokenize(&t.text)), &out.lexicon).value();
            assert!(s.abs() >= 0.2, "{s}");
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            SynthSpec { vocab_size: 50, ..small(Correspondence::Identity) },
            SynthSpec { platforms: vec![], ..small(Correspondence::Identity) },
            SynthSpec { min_len: 9, max_len: 3, ..small(Correspondence::Identity) },
            small(Correspondence::Explicit(vec![0, 0, 1, 2])),
            SynthSpec { emojis: 3, ..small(Correspondence::SwapPairs) },
        ];
        for spec in bad {
            assert!(matches!(generate(&spec), Err(SynthError::SpecInvalid(_))));
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = small(Correspondence::Explicit(vec![1, 0, 3, 2]));
        assert_eq!(SynthSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}
