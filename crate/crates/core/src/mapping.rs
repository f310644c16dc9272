//! Directional emoji mappings between platforms.
//!
//! For a source and a target platform, every emoji seen on both is sent to
//! the target-platform emoji whose vector is most cosine-similar to the
//! source-platform vector. Ties go to the lowest codepoint, and an emoji may
//! map to itself.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Platform;
use crate::embedding::{EmbeddingMatrix, EmojiEmbeddingSet};
use crate::text::{Emoji, Token, TokenSeq};

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("cosine similarity of a zero vector")]
    ZeroVector,
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("source and target share no emojis")]
    EmptyIntersection,
    #[error("requested {k} neighbours from a vocabulary of {n}")]
    TooManyNeighbours { k: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, MappingError> {
    if a.len() != b.len() {
        return Err(MappingError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(MappingError::ZeroVector);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbour {
    pub index: usize,
    pub similarity: f64,
}

/// Top-`k` vocabulary words by cosine similarity to `v`, best first, ties
/// broken by the word itself. Zero word rows score 0.
pub fn nearest_words(
    v: &[f64],
    words: &EmbeddingMatrix,
    k: usize,
) -> Result<Vec<Neighbour>, MappingError> {
    if k > words.len() {
        return Err(MappingError::TooManyNeighbours { k, n: words.len() });
    }
    if v.len() != words.dim() {
        return Err(MappingError::DimensionMismatch(v.len(), words.dim()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(MappingError::ZeroVector);
    }
    let vocab = words.vocab();
    let mut scored: Vec<Neighbour> = words
        .rows()
        .enumerate()
        .map(|(index, (_, row))| Neighbour {
            index,
            similarity: cosine_similarity(v, row).unwrap_or(0.0),
        })
        .collect();
    let order = |a: &Neighbour, b: &Neighbour| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| vocab.word(a.index).cmp(vocab.word(b.index)))
    };
    if k < scored.len() && k > 0 {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    } else {
        scored.truncate(k);
    }
    scored.sort_by(order);
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingEntry {
    pub source_emoji: Emoji,
    pub target_emoji: Emoji,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingTable {
    pub source_platform: Platform,
    pub target_platform: Platform,
    entries: BTreeMap<Emoji, MappingEntry>,
}

impl MappingTable {
    /// Build from entries, checking that the table is a function on its
    /// domain and that every target lies in the domain.
    pub fn from_entries(
        source_platform: Platform,
        target_platform: Platform,
        entries: Vec<MappingEntry>,
    ) -> Result<Self, MappingError> {
        let mut map = BTreeMap::new();
        for (i, e) in entries.into_iter().enumerate() {
            let src = e.source_emoji.clone();
            if map.insert(src.clone(), e).is_some() {
                return Err(MappingError::Parse {
                    line: i + 1,
                    message: format!("duplicate source emoji {src}"),
                });
            }
        }
        let table = MappingTable {
            source_platform,
            target_platform,
            entries: map,
        };
        if let Some(bad) = table
            .entries
            .values()
            .find(|e| !table.entries.contains_key(&e.target_emoji))
        {
            return Err(MappingError::Parse {
                line: 0,
                message: format!("target {} is outside the shared emoji set", bad.target_emoji),
            });
        }
        Ok(table)
    }

    pub fn identity<'a, I>(platform: Platform, emojis: I) -> Self
    where
        I: IntoIterator<Item = &'a Emoji>,
    {
        let entries = emojis
            .into_iter()
            .map(|e| {
                (
                    e.clone(),
                    MappingEntry {
                        source_emoji: e.clone(),
                        target_emoji: e.clone(),
                        similarity: 1.0,
                    },
                )
            })
            .collect();
        MappingTable {
            source_platform: platform,
            target_platform: platform,
            entries,
        }
    }

    pub fn get(&self, emoji: &Emoji) -> Option<&Emoji> {
        self.entries.get(emoji).map(|e| &e.target_emoji)
    }

    pub fn entry(&self, emoji: &Emoji) -> Option<&MappingEntry> {
        self.entries.get(emoji)
    }

    /// Entries in source-codepoint order.
    pub fn entries(&self) -> impl Iterator<Item = &MappingEntry> {
        self.entries.values()
    }

    /// The shared emoji set the table is defined on.
    pub fn domain(&self) -> impl Iterator<Item = &Emoji> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// How many entries agree with `other` on the target emoji.
    pub fn agreement(&self, other: &MappingTable) -> usize {
        self.entries
            .iter()
            .filter(|(k, e)| other.get(k) == Some(&e.target_emoji))
            .count()
    }
}

/// Maps each emoji shared by both sets to its most similar target emoji.
pub fn build_mapping(
    source: &EmojiEmbeddingSet,
    target: &EmojiEmbeddingSet,
) -> Result<MappingTable, MappingError> {
    let shared: Vec<&Emoji> = source.emojis().filter(|e| target.contains(e)).collect();
    if shared.is_empty() {
        return Err(MappingError::EmptyIntersection);
    }
    let mut entries = BTreeMap::new();
    for &src in &shared {
        let sv = source.get(src).expect("shared emoji has a source vector");
        let mut best: Option<(&Emoji, f64)> = None;
        // `shared` is in codepoint order, so strict `>` keeps the lowest on ties.
        for &cand in &shared {
            let sim = cosine_similarity(sv, target.get(cand).expect("shared"))?;
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((cand, sim));
            }
        }
        let (tgt, similarity) = best.expect("shared is non-empty");
        entries.insert(
            src.clone(),
            MappingEntry {
                source_emoji: src.clone(),
                target_emoji: tgt.clone(),
                similarity,
            },
        );
    }
    Ok(MappingTable {
        source_platform: source.platform,
        target_platform: target.platform,
        entries,
    })
}

/// Emojis left out of a mapping because only one side has them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExcludedEmojis {
    pub source_platform: Option<Platform>,
    pub target_platform: Option<Platform>,
    pub source_only: Vec<Emoji>,
    pub target_only: Vec<Emoji>,
}

impl ExcludedEmojis {
    pub fn between(source: &EmojiEmbeddingSet, target: &EmojiEmbeddingSet) -> Self {
        let s: BTreeSet<&Emoji> = source.emojis().collect();
        let t: BTreeSet<&Emoji> = target.emojis().collect();
        ExcludedEmojis {
            source_platform: Some(source.platform),
            target_platform: Some(target.platform),
            source_only: s.difference(&t).map(|e| (*e).clone()).collect(),
            target_only: t.difference(&s).map(|e| (*e).clone()).collect(),
        }
    }
}

/// Replace mapped emojis, returning the new sequence and how many emojis had
/// no entry in the table.
pub fn apply_mapping_counted(seq: &TokenSeq, table: &MappingTable) -> (TokenSeq, usize) {
    let mut unmapped = 0;
    let tokens = seq
        .tokens
        .iter()
        .map(|t| match t {
            Token::Emoji(e) => match table.get(e) {
                Some(m) => Token::Emoji(m.clone()),
                None => {
                    unmapped += 1;
                    t.clone()
                }
            },
            other => other.clone(),
        })
        .collect();
    (TokenSeq { tokens }, unmapped)
}

pub fn apply_mapping(seq: &TokenSeq, table: &MappingTable) -> TokenSeq {
    apply_mapping_counted(seq, table).0
}

/// Writes the TSV form: `#source=<p> target=<q>` then
/// `U+XXXX<TAB>U+YYYY<TAB>similarity` with five decimals.
pub fn write_mapping<W: Write>(table: &MappingTable, mut out: W) -> Result<(), MappingError> {
    writeln!(
        out,
        "#source={} target={}",
        table.source_platform, table.target_platform
    )?;
    for e in table.entries() {
        writeln!(
            out,
            "{}\t{}\t{:.5}",
            e.source_emoji.label(),
            e.target_emoji.label(),
            e.similarity
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_mapping<R: BufRead>(reader: R) -> Result<MappingTable, MappingError> {
    let perr = |line: usize, message: String| MappingError::Parse { line, message };
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(perr(1, "empty mapping file".into())),
    };
    let (src, tgt) = header
        .strip_prefix("#source=")
        .and_then(|rest| rest.split_once(" target="))
        .ok_or_else(|| perr(1, "expected `#source=<platform> target=<platform>`".into()))?;
    let source_platform: Platform = src.parse().map_err(|e| perr(1, format!("{e}")))?;
    let target_platform: Platform = tgt.trim().parse().map_err(|e| perr(1, format!("{e}")))?;

    let mut entries: BTreeMap<Emoji, MappingEntry> = BTreeMap::new();
    for (i, line) in lines {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(perr(line_no, format!("expected 3 fields, found {}", fields.len())));
        }
        let emoji = |s: &str| {
            Emoji::parse_label(s).ok_or_else(|| perr(line_no, format!("invalid emoji `{s}`")))
        };
        let source_emoji = emoji(fields[0])?;
        let target_emoji = emoji(fields[1])?;
        let similarity: f64 = fields[2]
            .parse()
            .ok()
            .filter(|s: &f64| (-1.0..=1.0).contains(s))
            .ok_or_else(|| perr(line_no, format!("invalid similarity `{}`", fields[2])))?;
        if entries.contains_key(&source_emoji) {
            return Err(perr(line_no, format!("duplicate source emoji {source_emoji}")));
        }
        entries.insert(
            source_emoji.clone(),
            MappingEntry {
                source_emoji,
                target_emoji,
                similarity,
            },
        );
    }
    MappingTable::from_entries(source_platform, target_platform, entries.into_values().collect())
}
