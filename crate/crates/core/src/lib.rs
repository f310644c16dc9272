//! Cross-platform emoji analysis and mapping.
//!
//! The crate learns per-platform emoji vectors against a shared, frozen word
//! embedding, maps emojis between platforms by cosine similarity, measures
//! how differently platforms use the same emoji, and evaluates whether
//! mapping emojis helps a downstream sentiment classifier.

pub mod analysis;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod mapping;
pub mod pipeline;
pub mod rng;
pub mod sentiment;
pub mod synth;
pub mod text;

pub use corpus::{Platform, PlatformCorpus, SourceTable, Tweet};
pub use embedding::{EmbeddingMatrix, EmojiEmbeddingSet, TrainConfig, Vocab};
pub use mapping::{MappingEntry, MappingTable};
pub use sentiment::{Lexicon, LexiconScorer, Scorer, SentimentScore};
pub use text::{Emoji, EmojiInventory, Token, TokenSeq, TokenizedCorpus, Tokenizer};
