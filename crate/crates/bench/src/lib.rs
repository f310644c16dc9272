//! Shared fixtures for the benchmarks.

use emojimap::rng::rng_from;
use emojimap::synth::{generate, PlatformCount, SynthSpec};
use emojimap::text::{EmojiInventory, TokenizeConfig};
use emojimap::{EmbeddingMatrix, EmojiEmbeddingSet, Platform, TokenizedCorpus, Tokenizer, Vocab};
use rand::Rng;

/// Two synthetic platforms of `tweets` tweets each, tokenized.
pub fn corpora(tweets: usize) -> Vec<TokenizedCorpus> {
    let spec = SynthSpec {
        vocab_size: 2000,
        platforms: vec![
            PlatformCount { platform: Platform::Ios, tweets },
            PlatformCount { platform: Platform::Android, tweets },
        ],
        ..SynthSpec::default()
    };
    let out = generate(&spec).expect("valid spec");
    let tok = Tokenizer::new(TokenizeConfig::default(), EmojiInventory::builtin());
    out.corpora.values().map(|c| tok.tokenize_corpus(c)).collect()
}

pub fn random_words(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = rng_from(seed, &[]);
    let vocab = Vocab::from_ordered((0..n).map(|i| (format!("w{i}"), 1)).collect()).expect("unique words");
    let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    EmbeddingMatrix::new(vocab, dim, data).expect("consistent shape")
}

pub fn random_emojis(platform: Platform, count: usize, dim: usize, seed: u64) -> EmojiEmbeddingSet {
    let mut rng = rng_from(seed, &[platform.stream_id()]);
    let mut set = EmojiEmbeddingSet::new(platform, dim);
    for e in EmojiInventory::builtin().iter().take(count) {
        set.vectors.insert(e.clone(), (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    set
}

pub fn random_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed, &[]);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
