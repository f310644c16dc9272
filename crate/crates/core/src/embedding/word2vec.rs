use rand::Rng;

use super::vocab::{build_vocab, UnigramSampler, Vocab};
use super::{axpy, dot, EmbeddingError, TrainConfig};
use crate::rng::rng_from;
use crate::text::TokenSeq;

const STREAM_INIT: u64 = 0x5749_4e49; // "WINI"
const STREAM_TRAIN: u64 = 0x5754_524e; // "WTRN"

/// Row-major `N × K` word matrix with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vocab,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vocab, dim: usize, data: Vec<f64>) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::InvalidConfig("dimension must be positive".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: vocab.len() * dim,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(EmbeddingError::Parse {
                line: pos / dim + 1,
                message: "non-finite vector component".into(),
            });
        }
        Ok(EmbeddingMatrix { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub(crate) fn vocab_mut(&mut self) -> &mut Vocab {
        &mut self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vector_of(&self, word: &str) -> Option<&[f64]> {
        self.vocab.index(word).map(|i| self.vector(i))
    }

    /// Whole matrix, row-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vocab
            .words()
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }
}

fn init_uniform(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..n * dim).map(|_| rng.random_range(-half..half)).collect()
}

/// Keep-probability for a word under word2vec-style subsampling.
fn keep_probability(count: u64, total: u64, threshold: f64) -> f64 {
    let f = count as f64 / total as f64;
    let t = threshold;
    (((f / t).sqrt() + 1.0) * t / f).min(1.0)
}

/// Skip-gram with negative sampling over the emoji-free union corpus.
///
/// Both the word (input) and context (output) matrices are trained; the
/// input matrix is returned. Training is single-threaded, so a fixed seed
/// always reproduces the same matrix.
pub fn train_word_embedding(
    corpus: &[TokenSeq],
    config: &TrainConfig,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    config.validate()?;
    if corpus.iter().any(|s| s.emoji_count() > 0) {
        return Err(EmbeddingError::InvalidConfig(
            "word embedding corpus must have emojis stripped".into(),
        ));
    }
    let vocab = build_vocab(corpus, config.min_count)?;
    let dim = config.dim;
    let n = vocab.len();

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.words().filter_map(|w| vocab.index(w)).collect())
        .collect();

    let mut input = init_uniform(&mut rng_from(config.seed, &[STREAM_INIT]), n, dim);
    let mut output = vec![0.0; n * dim];
    let sampler = UnigramSampler::new(&vocab);
    let mut rng = rng_from(config.seed, &[STREAM_TRAIN]);

    let tokens_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total = tokens_per_epoch * config.epochs as u64;
    let total_count = vocab.total_count();
    let keep: Option<Vec<f64>> = config.subsample.map(|t| {
        vocab
            .counts()
            .iter()
            .map(|&c| keep_probability(c, total_count, t))
            .collect()
    });

    let mut done: u64 = 0;
    let mut grad = vec![0.0; dim];
    let mut sent = Vec::new();
    for _ in 0..config.epochs {
        for raw in &sentences {
            sent.clear();
            match &keep {
                Some(keep) => {
                    sent.extend(raw.iter().copied().filter(|&w| rng.random::<f64>() < keep[w]))
                }
                None => sent.extend_from_slice(raw),
            }
            for (i, &center) in sent.iter().enumerate() {
                let lr = config.rate_at(done, total);
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(sent.len().saturating_sub(1));
                for (j, &ctx) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let center_vec = &input[center * dim..(center + 1) * dim];
                    let mut update = |target: usize, label: f64, grad: &mut [f64]| {
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let g = (label - super::sigmoid(dot(center_vec, out))) * lr;
                        axpy(g, out, grad);
                        axpy(g, center_vec, out);
                    };
                    update(ctx, 1.0, &mut grad);
                    for _ in 0..config.negatives {
                        let neg = sampler.sample(&mut rng);
                        if neg != ctx {
                            update(neg, 0.0, &mut grad);
                        }
                    }
                    axpy(1.0, &grad, &mut input[center * dim..(center + 1) * dim]);
                }
                done += 1;
            }
        }
    }
    EmbeddingMatrix::new(vocab, dim, input)
}
