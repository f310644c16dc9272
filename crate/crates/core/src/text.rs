//! Tweet tokenization and emoji handling.
//!
//! Rules, applied left to right over the raw text:
//! - `http://` / `https://` up to the next whitespace becomes a URL placeholder;
//! - `@` followed by word characters becomes a mention placeholder;
//! - any inventory emoji (longest sequence first) becomes its own token, even
//!   when glued to a word;
//! - a word is a maximal run of letters, digits and apostrophes, lowercased;
//! - everything else separates tokens (so `#happy` yields `happy`).
//!
//! Stopwords are removed after lowercasing.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Platform, PlatformCorpus};

const DEFAULT_INVENTORY: &str = include_str!("../data/inventory.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("line {line}: invalid emoji label `{label}`")]
    InvalidLabel { line: usize, label: String },
    #[error("emoji inventory is empty")]
    EmptyInventory,
}

/// One tracked emoji: a single scalar or a short fixed sequence.
///
/// Ordering follows codepoint order, which is what tie-breaking relies on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Emoji(String);

impl Emoji {
    pub fn from_char(c: char) -> Self {
        Emoji(c.to_string())
    }

    pub fn from_chars(chars: &[char]) -> Option<Self> {
        if chars.is_empty() {
            None
        } else {
            Some(Emoji(chars.iter().collect()))
        }
    }

    /// The literal character(s).
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// First (or only) scalar.
    pub fn first_char(&self) -> char {
        self.0.chars().next().expect("emoji is never empty")
    }

    /// `U+1F600`, or `U+1F44D_U+1F3FB` for sequences.
    pub fn label(&self) -> String {
        self.0
            .chars()
            .map(|c| format!("U+{:04X}", c as u32))
            .collect::<Vec<_>>()
            .join("_")
    }

    pub fn parse_label(label: &str) -> Option<Self> {
        let mut s = String::new();
        for part in label.split('_') {
            let hex = part
                .strip_prefix("U+")
                .or_else(|| part.strip_prefix("u+"))?;
            if hex.is_empty() || hex.len() > 6 {
                return None;
            }
            let cp = u32::from_str_radix(hex, 16).ok()?;
            s.push(char::from_u32(cp)?);
        }
        if s.is_empty() {
            None
        } else {
            Some(Emoji(s))
        }
    }

    /// Stream identifier for seed derivation.
    pub fn stream_id(&self) -> u64 {
        crate::rng::label_hash(&self.0)
    }
}

impl fmt::Display for Emoji {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Emoji {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emoji::parse_label(s).ok_or_else(|| TextError::InvalidLabel {
            line: 0,
            label: s.to_string(),
        })
    }
}

impl Serialize for Emoji {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Emoji {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Emoji::parse_label(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid emoji label `{s}`")))
    }
}

/// The set of emojis the toolkit tracks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiInventory {
    emojis: BTreeSet<Emoji>,
    first_chars: HashSet<char>,
    max_len: usize,
}

impl EmojiInventory {
    pub fn new<I: IntoIterator<Item = Emoji>>(emojis: I) -> Result<Self, TextError> {
        let emojis: BTreeSet<Emoji> = emojis.into_iter().collect();
        if emojis.is_empty() {
            return Err(TextError::EmptyInventory);
        }
        let first_chars = emojis.iter().map(Emoji::first_char).collect();
        let max_len = emojis.iter().map(|e| e.0.chars().count()).max().unwrap_or(1);
        Ok(EmojiInventory {
            emojis,
            first_chars,
            max_len,
        })
    }

    /// Parse the inventory file format: one `U+XXXX` label per line, `#` comments.
    pub fn parse(contents: &str) -> Result<Self, TextError> {
        let mut emojis = Vec::new();
        for (i, raw) in contents.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let e = Emoji::parse_label(line).ok_or_else(|| TextError::InvalidLabel {
                line: i + 1,
                label: line.to_string(),
            })?;
            emojis.push(e);
        }
        Self::new(emojis)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_INVENTORY).expect("bundled inventory is valid")
    }

    pub fn contains(&self, emoji: &Emoji) -> bool {
        self.emojis.contains(emoji)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Emoji> {
        self.emojis.iter()
    }

    pub fn len(&self) -> usize {
        self.emojis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emojis.is_empty()
    }

    /// Longest inventory emoji starting at `chars[pos]`, with its length.
    fn match_at(&self, chars: &[char], pos: usize) -> Option<(Emoji, usize)> {
        if !self.first_chars.contains(&chars[pos]) {
            return None;
        }
        let longest = self.max_len.min(chars.len() - pos);
        (1..=longest).rev().find_map(|len| {
            let cand = Emoji(chars[pos..pos + len].iter().collect());
            self.emojis.contains(&cand).then_some((cand, len))
        })
    }
}

pub fn is_emoji(codepoint: char, inventory: &EmojiInventory) -> bool {
    inventory.contains(&Emoji::from_char(codepoint))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Word(String),
    Emoji(Emoji),
    Url,
    Mention,
}

impl Token {
    pub const URL_SURFACE: &'static str = "<url>";
    pub const MENTION_SURFACE: &'static str = "<user>";

    pub fn word(s: &str) -> Self {
        Token::Word(s.to_string())
    }

    pub fn surface(&self) -> String {
        match self {
            Token::Word(w) => w.clone(),
            Token::Emoji(e) => e.label(),
            Token::Url => Self::URL_SURFACE.to_string(),
            Token::Mention => Self::MENTION_SURFACE.to_string(),
        }
    }

    pub fn as_emoji(&self) -> Option<&Emoji> {
        match self {
            Token::Emoji(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<&str> {
        match self {
            Token::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_emoji(&self) -> bool {
        matches!(self, Token::Emoji(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
}

impl TokenSeq {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSeq { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn emojis(&self) -> impl Iterator<Item = &Emoji> {
        self.tokens.iter().filter_map(Token::as_emoji)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter_map(Token::as_word)
    }

    pub fn emoji_count(&self) -> usize {
        self.emojis().count()
    }

    pub fn contains_emoji(&self, emoji: &Emoji) -> bool {
        self.emojis().any(|e| e == emoji)
    }

    /// Space-joined surfaces, for handing to text-based scorers.
    pub fn to_text(&self) -> String {
        self.tokens
            .iter()
            .map(Token::surface)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromIterator<Token> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        TokenSeq {
            tokens: iter.into_iter().collect(),
        }
    }
}

/// Drop every emoji token, keeping everything else in order.
pub fn strip_emojis(seq: &TokenSeq) -> TokenSeq {
    seq.tokens.iter().filter(|t| !t.is_emoji()).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizeConfig {
    pub stopwords: HashSet<String>,
}

impl Default for TokenizeConfig {
    fn default() -> Self {
        TokenizeConfig {
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
        }
    }
}

impl TokenizeConfig {
    pub fn without_stopwords() -> Self {
        TokenizeConfig {
            stopwords: HashSet::new(),
        }
    }

    pub fn with_stopwords(contents: &str) -> Self {
        TokenizeConfig {
            stopwords: parse_stopwords(contents),
        }
    }
}

/// One lowercase token per line; blank lines and `#` lines are skipped.
pub fn parse_stopwords(contents: &str) -> HashSet<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

fn is_mention_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn starts_with_at(chars: &[char], pos: usize, prefix: &str) -> bool {
    let mut i = pos;
    for p in prefix.chars() {
        match chars.get(i) {
            Some(c) if c.to_ascii_lowercase() == p => i += 1,
            _ => return false,
        }
    }
    true
}

pub fn tokenize(text: &str, config: &TokenizeConfig, inventory: &EmojiInventory) -> TokenSeq {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Token>| {
        if word.is_empty() {
            return;
        }
        let trimmed = word.trim_matches('\'');
        if !trimmed.is_empty() && !config.stopwords.contains(trimmed) {
            out.push(Token::Word(trimmed.to_string()));
        }
        word.clear();
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if word.is_empty()
            && (starts_with_at(&chars, i, "http://") || starts_with_at(&chars, i, "https://"))
        {
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            out.push(Token::Url);
            continue;
        }
        if c == '@' && word.is_empty() && chars.get(i + 1).is_some_and(|&n| is_mention_char(n)) {
            i += 1;
            while i < chars.len() && is_mention_char(chars[i]) {
                i += 1;
            }
            out.push(Token::Mention);
            continue;
        }
        if let Some((emoji, len)) = inventory.match_at(&chars, i) {
            flush(&mut word, &mut out);
            out.push(Token::Emoji(emoji));
            i += len;
            continue;
        }
        if is_word_char(c) {
            word.extend(c.to_lowercase());
        } else {
            flush(&mut word, &mut out);
        }
        i += 1;
    }
    flush(&mut word, &mut out);
    TokenSeq { tokens: out }
}

/// Tokenizer with its configuration bound, for corpus-wide use.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    pub config: TokenizeConfig,
    pub inventory: EmojiInventory,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            config: TokenizeConfig::default(),
            inventory: EmojiInventory::builtin(),
        }
    }
}

impl Tokenizer {
    pub fn new(config: TokenizeConfig, inventory: EmojiInventory) -> Self {
        Tokenizer { config, inventory }
    }

    pub fn tokenize(&self, text: &str) -> TokenSeq {
        tokenize(text, &self.config, &self.inventory)
    }

    pub fn tokenize_corpus(&self, corpus: &PlatformCorpus) -> TokenizedCorpus {
        TokenizedCorpus {
            platform: corpus.platform,
            tweets: corpus.tweets.iter().map(|t| self.tokenize(&t.text)).collect(),
        }
    }
}

/// A platform corpus after tokenization, emojis still present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub platform: Platform,
    pub tweets: Vec<TokenSeq>,
}

impl TokenizedCorpus {
    pub fn new(platform: Platform, tweets: Vec<TokenSeq>) -> Self {
        TokenizedCorpus { platform, tweets }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// The emoji-free variant of this corpus.
    pub fn stripped(&self) -> TokenizedCorpus {
        TokenizedCorpus {
            platform: self.platform,
            tweets: self.tweets.iter().map(strip_emojis).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(cp: u32) -> Emoji {
        Emoji::from_char(char::from_u32(cp).unwrap())
    }

    #[test]
    fn example_love_this() {
        let inv = EmojiInventory::builtin();
        let seq = tokenize("I LOVE this 😂", &TokenizeConfig::default(), &inv);
        assert_eq!(
            seq.tokens,
            vec![Token::word("love"), Token::Emoji(e(0x1F602))]
        );
    }

    #[test]
    fn empty_text() {
        let seq = tokenize("", &TokenizeConfig::default(), &EmojiInventory::builtin());
        assert!(seq.is_empty());
    }

    #[test]
    fn url_and_mention_placeholders() {
        let seq = tokenize(
            "see http://a.co @bob",
            &TokenizeConfig::default(),
            &EmojiInventory::builtin(),
        );
        assert_eq!(seq.tokens, vec![Token::word("see"), Token::Url, Token::Mention]);
    }

    #[test]
    fn glued_emoji_splits_words_and_hashtags_keep_word() {
        let seq = tokenize(
            "great😀day #Happy don't",
            &TokenizeConfig::without_stopwords(),
            &EmojiInventory::builtin(),
        );
        assert_eq!(
            seq.tokens,
            vec![
                Token::word("great"),
                Token::Emoji(e(0x1F600)),
                Token::word("day"),
                Token::word("happy"),
                Token::word("don't"),
            ]
        );
    }

    #[test]
    fn untracked_symbols_are_separators() {
        // U+1F697 (car) is not tracked; FE0F variation selector is dropped.
        let seq = tokenize(
            "go🚗now ❤\u{FE0F}",
            &TokenizeConfig::without_stopwords(),
            &EmojiInventory::builtin(),
        );
        assert_eq!(
            seq.tokens,
            vec![Token::word("go"), Token::word("now"), Token::Emoji(e(0x2764))]
        );
    }

    #[test]
    fn sequences_match_longest_first() {
        let inv = EmojiInventory::parse("U+1F44D\nU+1F44D_U+1F3FB\n").unwrap();
        let seq = tokenize("👍🏻👍", &TokenizeConfig::without_stopwords(), &inv);
        let first = Emoji::parse_label("U+1F44D_U+1F3FB").unwrap();
        assert_eq!(
            seq.tokens,
            vec![Token::Emoji(first), Token::Emoji(e(0x1F44D))]
        );
        assert_eq!(seq.tokens[0].surface(), "U+1F44D_U+1F3FB");
    }

    #[test]
    fn is_emoji_examples() {
        let inv = EmojiInventory::builtin();
        assert!(is_emoji('\u{1F600}', &inv));
        assert!(is_emoji('\u{1F382}', &inv));
        assert!(!is_emoji('a', &inv));
    }

    #[test]
    fn inventory_parsing() {
        let inv = EmojiInventory::parse("# faces\nU+1F628  # fearful\n\nU+1F44F\n").unwrap();
        assert_eq!(inv.len(), 2);
        assert_eq!(
            EmojiInventory::parse("U+ZZZZ").unwrap_err(),
            TextError::InvalidLabel {
                line: 1,
                label: "U+ZZZZ".into()
            }
        );
        assert_eq!(
            EmojiInventory::parse("# nothing\n").unwrap_err(),
            TextError::EmptyInventory
        );
        // surrogates are not scalar values
        assert!(EmojiInventory::parse("U+D800").is_err());
    }

    #[test]
    fn strip_examples() {
        let s = TokenSeq::new(vec![Token::word("hi"), Token::Emoji(e(0x1F628))]);
        assert_eq!(strip_emojis(&s).tokens, vec![Token::word("hi")]);
        let plain = TokenSeq::new(vec![Token::word("a"), Token::Url]);
        assert_eq!(strip_emojis(&plain), plain);
        let only = TokenSeq::new(vec![Token::Emoji(e(0x1F600)), Token::Emoji(e(0x1F601))]);
        assert!(strip_emojis(&only).is_empty());
    }

    #[test]
    fn label_round_trip() {
        let x = e(0x2764);
        assert_eq!(x.label(), "U+2764");
        assert_eq!(Emoji::parse_label("U+2764"), Some(x));
        assert_eq!(Emoji::parse_label("2764"), None);
    }

    proptest! {
        #[test]
        fn tokenizer_properties(text in "[a-zA-Z '@#.:/😀😂🚗👍 ]{0,40}") {
            let inv = EmojiInventory::builtin();
            let seq = tokenize(&text, &TokenizeConfig::default(), &inv);
            let stripped = strip_emojis(&seq);
            prop_assert_eq!(strip_emojis(&stripped).clone(), stripped.clone());
            prop_assert_eq!(stripped.len() + seq.emoji_count(), seq.len());
            for t in &seq.tokens {
                match t {
                    Token::Emoji(em) => prop_assert!(inv.contains(em)),
                    Token::Word(w) => {
                        prop_assert!(!w.chars().any(char::is_whitespace));
                        prop_assert!(!w.chars().any(|c| is_emoji(c, &inv)));
                    }
                    _ => {}
                }
            }
        }
    }
}
