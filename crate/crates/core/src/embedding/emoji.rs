use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::sgns::accumulate_gradient;
use super::vocab::{UnigramSampler, Vocab};
use super::word2vec::EmbeddingMatrix;
use super::{axpy, EmbeddingError, NegativeMode, TrainConfig, FULL_VOCAB_LIMIT};
use crate::corpus::Platform;
use crate::rng::rng_from;
use crate::text::{Emoji, Token, TokenizedCorpus};

const STREAM_INIT: u64 = 0x4549_4e49; // "EINI"
const STREAM_NEG: u64 = 0x454e_4547; // "ENEG"

/// One emoji occurrence next to one in-vocabulary word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextPair {
    pub emoji: Emoji,
    pub word: usize,
}

/// Emoji vectors learned on one platform's corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EmojiEmbeddingSet {
    pub platform: Platform,
    pub dim: usize,
    pub vectors: BTreeMap<Emoji, Vec<f64>>,
    /// Occurrence counts at training time; not persisted by the file format.
    pub counts: BTreeMap<Emoji, u64>,
}

impl EmojiEmbeddingSet {
    pub fn new(platform: Platform, dim: usize) -> Self {
        EmojiEmbeddingSet {
            platform,
            dim,
            vectors: BTreeMap::new(),
            counts: BTreeMap::new(),
        }
    }

    pub fn get(&self, emoji: &Emoji) -> Option<&[f64]> {
        self.vectors.get(emoji).map(Vec::as_slice)
    }

    pub fn contains(&self, emoji: &Emoji) -> bool {
        self.vectors.contains_key(emoji)
    }

    pub fn emojis(&self) -> impl Iterator<Item = &Emoji> {
        self.vectors.keys()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Emoji occurrence counts over a corpus.
pub fn emoji_counts(corpus: &TokenizedCorpus) -> BTreeMap<Emoji, u64> {
    let mut counts = BTreeMap::new();
    for seq in &corpus.tweets {
        for e in seq.emojis() {
            *counts.entry(e.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Pairs every emoji occurrence with the in-vocabulary words at most
/// `window` positions away.
///
/// Other emojis do not occupy positions. Placeholders and out-of-vocabulary
/// words do occupy positions but never produce pairs. The result keeps one
/// entry per occurrence, in corpus order, since training weights repeated
/// pairs by frequency.
pub fn extract_context_pairs(
    corpus: &TokenizedCorpus,
    vocab: &Vocab,
    window: usize,
) -> Vec<ContextPair> {
    let mut pairs = Vec::new();
    for seq in &corpus.tweets {
        // Non-emoji tokens, and for each emoji the count of non-emoji tokens before it.
        let mut others: Vec<Option<usize>> = Vec::with_capacity(seq.len());
        let mut anchors: Vec<(&Emoji, usize)> = Vec::new();
        for tok in &seq.tokens {
            match tok {
                Token::Emoji(e) => anchors.push((e, others.len())),
                Token::Word(w) => others.push(vocab.index(w)),
                Token::Url | Token::Mention => others.push(None),
            }
        }
        for (emoji, split) in anchors {
            let left = others[..split].iter().rev().take(window);
            let right = others[split..].iter().take(window);
            for word in left.chain(right).flatten() {
                pairs.push(ContextPair {
                    emoji: emoji.clone(),
                    word: *word,
                });
            }
        }
    }
    pairs
}

fn fit_one(
    emoji: &Emoji,
    words: &[usize],
    matrix: &EmbeddingMatrix,
    sampler: Option<&UnigramSampler>,
    config: &TrainConfig,
) -> Vec<f64> {
    let dim = matrix.dim();
    let half = 0.5 / dim as f64;
    let mut init = rng_from(config.seed, &[STREAM_INIT, emoji.stream_id()]);
    let mut e: Vec<f64> = (0..dim).map(|_| init.random_range(-half..half)).collect();
    let mut rng = rng_from(config.seed, &[STREAM_NEG, emoji.stream_id()]);

    let total = (words.len() * config.epochs) as u64;
    let mut done = 0u64;
    let mut grad = vec![0.0; dim];
    let mut negs: Vec<usize> = Vec::with_capacity(config.negatives);
    for _ in 0..config.epochs {
        for &w in words {
            let lr = config.rate_at(done, total);
            grad.iter_mut().for_each(|g| *g = 0.0);
            match sampler {
                Some(sampler) => {
                    negs.clear();
                    negs.extend(
                        (0..config.negatives)
                            .map(|_| sampler.sample(&mut rng))
                            .filter(|&k| k != w),
                    );
                    accumulate_gradient(
                        &e,
                        matrix.vector(w),
                        negs.iter().map(|&k| matrix.vector(k)),
                        &mut grad,
                    );
                }
                None => accumulate_gradient(
                    &e,
                    matrix.vector(w),
                    matrix.as_slice().chunks_exact(dim),
                    &mut grad,
                ),
            }
            axpy(lr, &grad, &mut e);
            done += 1;
        }
    }
    e
}

/// Learns one vector per sufficiently frequent emoji by stochastic ascent on
/// the negative-sampling objective, holding `words` fixed.
///
/// Each emoji is optimised independently: its initial vector and negative
/// draws come from streams seeded by `(seed, emoji)`, and its learning rate
/// decays over its own `pairs × epochs` updates. Results are therefore the
/// same whether emojis are processed serially or across workers. Emojis that
/// clear `emoji_min_count` but have no in-vocabulary neighbours are omitted.
pub fn train_emoji_vectors(
    corpus: &TokenizedCorpus,
    words: &EmbeddingMatrix,
    config: &TrainConfig,
) -> Result<EmojiEmbeddingSet, EmbeddingError> {
    config.validate()?;
    if config.dim != words.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: words.dim(),
            actual: config.dim,
        });
    }
    let sampler = match config.negative_mode {
        NegativeMode::Sampled => Some(UnigramSampler::new(words.vocab())),
        NegativeMode::FullVocab if words.len() > FULL_VOCAB_LIMIT => {
            return Err(EmbeddingError::FullVocabTooLarge {
                max: FULL_VOCAB_LIMIT,
                actual: words.len(),
            })
        }
        NegativeMode::FullVocab => None,
    };

    let counts: BTreeMap<Emoji, u64> = emoji_counts(corpus)
        .into_iter()
        .filter(|&(_, c)| c >= config.emoji_min_count)
        .collect();
    let mut grouped: BTreeMap<Emoji, Vec<usize>> = BTreeMap::new();
    for pair in extract_context_pairs(corpus, words.vocab(), config.window) {
        if counts.contains_key(&pair.emoji) {
            grouped.entry(pair.emoji).or_default().push(pair.word);
        }
    }
    if grouped.is_empty() {
        return Err(EmbeddingError::NoEmojis);
    }

    let jobs: Vec<(&Emoji, &Vec<usize>)> = grouped.iter().collect();
    let fit = |(emoji, ws): &(&Emoji, &Vec<usize>)| {
        ((*emoji).clone(), fit_one(emoji, ws, words, sampler.as_ref(), config))
    };
    let workers = config.parallel_workers();
    let fitted: Vec<(Emoji, Vec<f64>)> = if workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| EmbeddingError::InvalidConfig(e.to_string()))?
            .install(|| jobs.par_iter().map(fit).collect())
    } else {
        jobs.iter().map(fit).collect()
    };

    let mut set = EmojiEmbeddingSet::new(corpus.platform, words.dim());
    for (emoji, v) in fitted {
        set.counts.insert(emoji.clone(), counts[&emoji]);
        set.vectors.insert(emoji, v);
    }
    Ok(set)
}
