//! Lexicon-based sentence polarity.
//!
//! The score of a token sequence is the mean polarity of the words found in
//! the lexicon, with a word's sign flipped when a negator occurs among the
//! three tokens before it. Sequences without lexicon words score 0.
//! Emoji tokens are skipped entirely.
//!
//! Any other scorer can be plugged in through [`Scorer`]; [`ProcessScorer`]
//! talks to an external program over stdin/stdout.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::text::{Token, TokenSeq};

/// Tokens before a lexicon word that are checked for negators.
pub const NEGATION_WINDOW: usize = 3;

const DEFAULT_NEGATORS: &[&str] = &[
    "not", "no", "never", "nor", "none", "nothing", "nobody", "neither", "without", "cannot",
    "can't", "don't", "doesn't", "didn't", "isn't", "aren't", "wasn't", "weren't", "won't",
    "wouldn't", "shouldn't", "couldn't", "hasn't", "haven't", "hadn't", "ain't",
];

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: polarity {value} outside [-1, 1]")]
    PolarityOutOfRange { line: usize, value: f64 },
    #[error("external scorer failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A polarity in `[-1, 1]`; 0 is neutral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SentimentScore(f64);

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore(0.0);

    /// Clamps into `[-1, 1]`; NaN becomes neutral.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            SentimentScore(0.0)
        } else {
            SentimentScore(value.clamp(-1.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lexicon {
    polarities: HashMap<String, f64>,
    negators: HashSet<String>,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon {
            polarities: HashMap::new(),
            negators: DEFAULT_NEGATORS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Parse `word<TAB>polarity` lines. Blank and `#` lines are skipped.
    pub fn parse(contents: &str) -> Result<Self, SentimentError> {
        let mut lex = Lexicon::new();
        for (i, raw) in contents.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, pol) = line.split_once('\t').ok_or_else(|| SentimentError::Parse {
                line: line_no,
                message: "expected `word<TAB>polarity`".into(),
            })?;
            let value: f64 = pol.trim().parse().map_err(|_| SentimentError::Parse {
                line: line_no,
                message: format!("invalid polarity `{pol}`"),
            })?;
            lex.insert(word, value)
                .map_err(|value| SentimentError::PolarityOutOfRange {
                    line: line_no,
                    value,
                })?;
        }
        Ok(lex)
    }

    /// Adds a word; returns the rejected value if it is outside `[-1, 1]`.
    pub fn insert(&mut self, word: &str, polarity: f64) -> Result<(), f64> {
        if !(-1.0..=1.0).contains(&polarity) {
            return Err(polarity);
        }
        self.polarities.insert(word.trim().to_lowercase(), polarity);
        Ok(())
    }

    /// Replace the negator list with one word per line.
    pub fn set_negators(&mut self, contents: &str) {
        self.negators = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
    }

    pub fn polarity(&self, word: &str) -> Option<f64> {
        self.polarities.get(word).copied()
    }

    pub fn is_negator(&self, word: &str) -> bool {
        self.negators.contains(word)
    }

    pub fn len(&self) -> usize {
        self.polarities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarities.is_empty()
    }

    /// Lines in the TSV format, sorted by word.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self.polarities.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        rows.iter().map(|(w, p)| format!("{w}\t{p}\n")).collect()
    }
}

pub fn load_lexicon(path: &std::path::Path) -> Result<Lexicon, SentimentError> {
    Lexicon::parse(&std::fs::read_to_string(path)?)
}

pub fn score(seq: &TokenSeq, lexicon: &Lexicon) -> SentimentScore {
    let tokens: Vec<&Token> = seq.tokens.iter().filter(|t| !t.is_emoji()).collect();
    let mut sum = 0.0;
    let mut matched = 0usize;
    for (i, tok) in tokens.iter().enumerate() {
        let Token::Word(w) = tok else { continue };
        let Some(p) = lexicon.polarity(w) else { continue };
        let negated = tokens[i.saturating_sub(NEGATION_WINDOW)..i]
            .iter()
            .any(|t| t.as_word().is_some_and(|w| lexicon.is_negator(w)));
        sum += if negated { -p } else { p };
        matched += 1;
    }
    if matched == 0 {
        SentimentScore::NEUTRAL
    } else {
        SentimentScore::new(sum / matched as f64)
    }
}

/// Anything that turns an emoji-free token sequence into a polarity.
pub trait Scorer: Sync {
    fn score(&self, seq: &TokenSeq) -> Result<SentimentScore, SentimentError>;

    fn score_all(&self, seqs: &[TokenSeq]) -> Result<Vec<SentimentScore>, SentimentError> {
        seqs.iter().map(|s| self.score(s)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LexiconScorer {
    pub lexicon: Lexicon,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconScorer { lexicon }
    }
}

impl Scorer for LexiconScorer {
    fn score(&self, seq: &TokenSeq) -> Result<SentimentScore, SentimentError> {
        Ok(score(seq, &self.lexicon))
    }
}

/// External scorer: receives `{"text": "..."}` lines on stdin and must print
/// one decimal score per line, in order.
#[derive(Debug, Clone)]
pub struct ProcessScorer {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ProcessScorer {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        ProcessScorer {
            program: program.into(),
            args,
        }
    }
}

impl Scorer for ProcessScorer {
    fn score(&self, seq: &TokenSeq) -> Result<SentimentScore, SentimentError> {
        Ok(self.score_all(std::slice::from_ref(seq))?[0])
    }

    fn score_all(&self, seqs: &[TokenSeq]) -> Result<Vec<SentimentScore>, SentimentError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let payload: Vec<String> = seqs
            .iter()
            .map(|s| {
                let text: Vec<String> = s
                    .tokens
                    .iter()
                    .filter(|t| !t.is_emoji())
                    .map(Token::surface)
                    .collect();
                serde_json::json!({ "text": text.join(" ") }).to_string()
            })
            .collect();
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            for line in payload {
                writeln!(stdin, "{line}")?;
            }
            Ok(())
        });
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut scores = Vec::with_capacity(seqs.len());
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line?;
            let v: f64 = line.trim().parse().map_err(|_| {
                SentimentError::External(format!("output line {}: `{line}` is not a number", i + 1))
            })?;
            scores.push(SentimentScore::new(v));
        }
        writer
            .join()
            .map_err(|_| SentimentError::External("writer thread panicked".into()))??;
        let status = child.wait()?;
        if !status.success() {
            return Err(SentimentError::External(format!("exited with {status}")));
        }
        if scores.len() != seqs.len() {
            return Err(SentimentError::External(format!(
                "expected {} scores, got {}",
                seqs.len(),
                scores.len()
            )));
        }
        Ok(scores)
    }
}
