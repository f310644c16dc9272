use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::EmbeddingError;
use crate::text::TokenSeq;

/// Exponent applied to unigram counts for negative sampling.
pub const UNIGRAM_POWER: f64 = 0.75;

/// Word vocabulary, indexed by descending frequency with lexicographic ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Build from `(word, count)` pairs already in index order.
    ///
    /// Duplicate words are rejected since the mapping must stay bijective.
    pub fn from_ordered(entries: Vec<(String, u64)>) -> Result<Self, EmbeddingError> {
        if entries.is_empty() {
            return Err(EmbeddingError::EmptyVocab);
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (w, c)) in entries.into_iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbeddingError::Parse {
                    line: i + 1,
                    message: format!("duplicate vocabulary entry `{w}`"),
                });
            }
            words.push(w);
            counts.push(c);
        }
        Ok(Vocab {
            words,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Replace counts, e.g. after loading a count sidecar.
    pub(crate) fn set_counts(&mut self, counts: Vec<u64>) {
        assert_eq!(counts.len(), self.words.len());
        self.counts = counts;
    }
}

/// Count `Word` tokens and keep those seen at least `min_count` times.
pub fn build_vocab<'a, I>(seqs: I, min_count: u64) -> Result<Vocab, EmbeddingError>
where
    I: IntoIterator<Item = &'a TokenSeq>,
{
    if min_count == 0 {
        return Err(EmbeddingError::InvalidConfig(
            "min_count must be at least 1".into(),
        ));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for seq in seqs {
        for w in seq.words() {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_ordered(kept)
}

/// Draws word indices from the unigram distribution raised to 0.75.
#[derive(Debug, Clone)]
pub struct UnigramSampler {
    dist: WeightedIndex<f64>,
}

impl UnigramSampler {
    pub fn new(vocab: &Vocab) -> Self {
        // Zero counts (e.g. a vocab loaded without counts) fall back to uniform.
        let all_zero = vocab.counts().iter().all(|&c| c == 0);
        let weights = vocab.counts().iter().map(|&c| {
            if all_zero {
                1.0
            } else {
                (c as f64).powf(UNIGRAM_POWER)
            }
        });
        UnigramSampler {
            dist: WeightedIndex::new(weights).expect("vocab is non-empty with finite weights"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

/// `n` i.i.d. negative draws.
pub fn negative_sample<R: Rng + ?Sized>(vocab: &Vocab, n: usize, rng: &mut R) -> Vec<usize> {
    let sampler = UnigramSampler::new(vocab);
    (0..n).map(|_| sampler.sample(rng)).collect()
}
