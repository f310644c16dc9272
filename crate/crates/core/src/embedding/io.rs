//! Plain-text embedding files.
//!
//! ```text
//! #platform: iOS        (emoji files only)
//! N K
//! token v1 v2 ... vK
//! ```
//!
//! Values are written in shortest round-trip form, so reading a file back
//! gives bit-identical vectors.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::emoji::EmojiEmbeddingSet;
use super::vocab::Vocab;
use super::word2vec::EmbeddingMatrix;
use super::EmbeddingError;
use crate::corpus::Platform;
use crate::text::Emoji;

const PLATFORM_TAG: &str = "#platform:";

fn parse_err(line: usize, message: impl Into<String>) -> EmbeddingError {
    EmbeddingError::Parse {
        line,
        message: message.into(),
    }
}

fn write_row<W: Write>(out: &mut W, token: &str, v: &[f64]) -> std::io::Result<()> {
    out.write_all(token.as_bytes())?;
    for x in v {
        write!(out, " {x}")?;
    }
    out.write_all(b"\n")
}

pub fn write_word_embeddings<W: Write>(
    matrix: &EmbeddingMatrix,
    mut out: W,
) -> Result<(), EmbeddingError> {
    writeln!(out, "{} {}", matrix.len(), matrix.dim())?;
    for (word, v) in matrix.rows() {
        write_row(&mut out, word, v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_emoji_embeddings<W: Write>(
    set: &EmojiEmbeddingSet,
    mut out: W,
) -> Result<(), EmbeddingError> {
    writeln!(out, "{PLATFORM_TAG} {}", set.platform)?;
    writeln!(out, "{} {}", set.len(), set.dim)?;
    for (emoji, v) in &set.vectors {
        write_row(&mut out, &emoji.label(), v)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `(line number, line)` pairs, skipping nothing.
fn numbered_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), EmbeddingError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(EmbeddingError::from))
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, usize), EmbeddingError> {
    let mut parts = line.split_whitespace();
    let n = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| parse_err(line_no, "expected header `N K`"))?;
    let k = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| parse_err(line_no, "expected header `N K`"))?;
    if parts.next().is_some() || k == 0 {
        return Err(parse_err(line_no, "expected header `N K` with K > 0"));
    }
    Ok((n, k))
}

fn parse_row(line_no: usize, line: &str, dim: usize) -> Result<(String, Vec<f64>), EmbeddingError> {
    let mut parts = line.split(' ');
    let token = parts
        .next()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| parse_err(line_no, "missing token"))?;
    let values = parts
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(line_no, format!("invalid value `{p}`")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() != dim {
        return Err(parse_err(
            line_no,
            format!("expected {dim} values, found {}", values.len()),
        ));
    }
    Ok((token.to_string(), values))
}

pub fn read_word_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingMatrix, EmbeddingError> {
    let mut lines = numbered_lines(reader);
    let (line_no, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(1, "empty embedding file"))?;
    let (n, dim) = parse_header(line_no, &header)?;
    let mut entries = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for item in lines {
        let (line_no, line) = item?;
        if line.is_empty() {
            continue;
        }
        let (token, values) = parse_row(line_no, &line, dim)?;
        entries.push((token, 0));
        data.extend(values);
    }
    if entries.len() != n {
        return Err(parse_err(
            line_no,
            format!("header declares {n} rows, file has {}", entries.len()),
        ));
    }
    EmbeddingMatrix::new(Vocab::from_ordered(entries)?, dim, data)
}

pub fn read_emoji_embeddings<R: BufRead>(reader: R) -> Result<EmojiEmbeddingSet, EmbeddingError> {
    let mut lines = numbered_lines(reader);
    let (tag_no, tag) = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(1, "empty embedding file"))?;
    let platform: Platform = tag
        .strip_prefix(PLATFORM_TAG)
        .ok_or_else(|| parse_err(tag_no, "expected `#platform: <name>`"))?
        .trim()
        .parse()
        .map_err(|e: crate::corpus::CorpusError| parse_err(tag_no, e.to_string()))?;
    let (line_no, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(2, "missing header"))?;
    let (n, dim) = parse_header(line_no, &header)?;
    let mut set = EmojiEmbeddingSet::new(platform, dim);
    for item in lines {
        let (line_no, line) = item?;
        if line.is_empty() {
            continue;
        }
        let (token, values) = parse_row(line_no, &line, dim)?;
        let emoji = Emoji::parse_label(&token)
            .ok_or_else(|| parse_err(line_no, format!("invalid emoji label `{token}`")))?;
        if set.vectors.insert(emoji, values).is_some() {
            return Err(parse_err(line_no, format!("duplicate emoji `{token}`")));
        }
    }
    if set.len() != n {
        return Err(parse_err(
            line_no,
            format!("header declares {n} rows, file has {}", set.len()),
        ));
    }
    Ok(set)
}

/// `word<TAB>count` lines in vocabulary order.
pub fn write_vocab_counts<W: Write>(vocab: &Vocab, mut out: W) -> Result<(), EmbeddingError> {
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{w}\t{c}")?;
    }
    out.flush()?;
    Ok(())
}

/// Attach counts from a sidecar written by [`write_vocab_counts`].
/// Words missing from the sidecar keep a count of zero.
pub fn read_vocab_counts<R: BufRead>(
    reader: R,
    matrix: &mut EmbeddingMatrix,
) -> Result<(), EmbeddingError> {
    let mut by_word: HashMap<String, u64> = HashMap::new();
    for item in numbered_lines(reader) {
        let (line_no, line) = item?;
        if line.is_empty() {
            continue;
        }
        let (w, c) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(line_no, "expected `word<TAB>count`"))?;
        let c: u64 = c
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid count `{c}`")))?;
        by_word.insert(w.to_string(), c);
    }
    let counts = matrix
        .vocab()
        .words()
        .iter()
        .map(|w| by_word.get(w).copied().unwrap_or(0))
        .collect();
    matrix.vocab_mut().set_counts(counts);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<f64>, dim: usize) -> EmbeddingMatrix {
        let n = values.len() / dim;
        let vocab =
            Vocab::from_ordered((0..n).map(|i| (format!("w{i}"), (n - i) as u64)).collect())
                .unwrap();
        EmbeddingMatrix::new(vocab, dim, values).unwrap()
    }

    #[test]
    fn word_file_layout() {
        let m = matrix(vec![0.5, -1.0, 0.25, 2.0], 2);
        let mut buf = Vec::new();
        write_word_embeddings(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 2\nw0 0.5 -1\nw1 0.25 2\n");
    }

    #[test]
    fn emoji_file_layout_and_errors() {
        let mut set = EmojiEmbeddingSet::new(Platform::Windows, 2);
        set.vectors.insert(Emoji::from_char('😨'), vec![1.0, 0.0]);
        let mut buf = Vec::new();
        write_emoji_embeddings(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "#platform: Windows\n1 2\nU+1F628 1 0\n");
        let back = read_emoji_embeddings(text.as_bytes()).unwrap();
        assert_eq!(back.vectors, set.vectors);
        assert_eq!(back.platform, Platform::Windows);

        assert!(read_emoji_embeddings("1 2\nU+1F628 1 0\n".as_bytes()).is_err());
        let dup = "#platform: iOS\n2 1\nU+1F628 1\nU+1F628 2\n";
        assert!(matches!(
            read_emoji_embeddings(dup.as_bytes()),
            Err(EmbeddingError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn malformed_word_files() {
        assert!(read_word_embeddings("".as_bytes()).is_err());
        assert!(read_word_embeddings("2 2\na 1 2\n".as_bytes()).is_err());
        assert!(matches!(
            read_word_embeddings("1 2\na 1\n".as_bytes()),
            Err(EmbeddingError::Parse { line: 2, .. })
        ));
        assert!(read_word_embeddings("1 1\na NaN\n".as_bytes()).is_err());
    }

    #[test]
    fn vocab_count_sidecar() {
        let m = matrix(vec![1.0, 2.0, 3.0], 1);
        let mut buf = Vec::new();
        write_vocab_counts(m.vocab(), &mut buf).unwrap();
        let mut text = Vec::new();
        write_word_embeddings(&m, &mut text).unwrap();
        let mut loaded = read_word_embeddings(text.as_slice()).unwrap();
        assert_eq!(loaded.vocab().counts(), &[0, 0, 0]);
        read_vocab_counts(buf.as_slice(), &mut loaded).unwrap();
        assert_eq!(loaded, m);
    }

    proptest! {
        #[test]
        fn word_file_round_trip_is_bit_exact(
            values in proptest::collection::vec(-1e6f64..1e6, 1..40),
            dim in 1usize..4,
        ) {
            let n = values.len() / dim;
            prop_assume!(n > 0);
            let m = matrix(values[..n * dim].to_vec(), dim);
            let mut buf = Vec::new();
            write_word_embeddings(&m, &mut buf).unwrap();
            let back = read_word_embeddings(buf.as_slice()).unwrap();
            prop_assert_eq!(back.as_slice(), m.as_slice());
            prop_assert_eq!(back.vocab().words(), m.vocab().words());
        }
    }
}
