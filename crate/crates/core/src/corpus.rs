//! Tweet ingestion and per-platform partitioning.
//!
//! Records arrive as JSONL with `id`, `text` and `source` fields. The
//! `source` string names the client application and decides the platform.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("unknown platform name `{0}`")]
    UnknownPlatformName(String),
    #[error("source table line {line}: {message}")]
    SourceTable { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The client ecosystem a tweet was written on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Platform {
    Android,
    #[serde(rename = "iOS")]
    Ios,
    Twitter,
    Windows,
    Unknown,
}

impl Platform {
    pub const NAMED: [Platform; 4] = [
        Platform::Android,
        Platform::Ios,
        Platform::Twitter,
        Platform::Windows,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Platform::Android => "Android",
            Platform::Ios => "iOS",
            Platform::Twitter => "Twitter",
            Platform::Windows => "Windows",
            Platform::Unknown => "Unknown",
        }
    }

    /// Small stable identifier for seed derivation.
    pub fn stream_id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Platform {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Android" => Ok(Platform::Android),
            "iOS" => Ok(Platform::Ios),
            "Twitter" => Ok(Platform::Twitter),
            "Windows" => Ok(Platform::Windows),
            "Unknown" => Ok(Platform::Unknown),
            other => Err(CorpusError::UnknownPlatformName(other.to_string())),
        }
    }
}

/// Exact, case-sensitive source string to platform table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceTable {
    entries: HashMap<String, Platform>,
}

impl Default for SourceTable {
    fn default() -> Self {
        let entries = [
            ("Twitter for Android", Platform::Android),
            ("Twitter for iPad", Platform::Ios),
            ("Twitter for iPhone", Platform::Ios),
            ("iOS", Platform::Ios),
            ("Twitter Web Client", Platform::Twitter),
            ("Twitter for Windows Phone", Platform::Windows),
            ("Twitter for Windows", Platform::Windows),
        ]
        .into_iter()
        .map(|(s, p)| (s.to_string(), p))
        .collect();
        SourceTable { entries }
    }
}

impl SourceTable {
    pub fn empty() -> Self {
        SourceTable {
            entries: HashMap::new(),
        }
    }

    pub fn insert(&mut self, source: impl Into<String>, platform: Platform) {
        self.entries.insert(source.into(), platform);
    }

    /// Extend the table from `source<TAB>platform` lines; `#` starts a comment.
    pub fn extend_from_tsv(&mut self, contents: &str) -> Result<(), CorpusError> {
        for (i, raw) in contents.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (source, platform) =
                line.split_once('\t')
                    .ok_or_else(|| CorpusError::SourceTable {
                        line: i + 1,
                        message: "expected `source<TAB>platform`".into(),
                    })?;
            let platform: Platform = platform.trim().parse()?;
            self.insert(source, platform);
        }
        Ok(())
    }

    pub fn detect(&self, source: &str) -> Platform {
        self.entries.get(source).copied().unwrap_or(Platform::Unknown)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Platform for a source string under the default table.
pub fn detect_platform(source: &str) -> Platform {
    SourceTable::default().detect(source)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub source: String,
    pub platform: Platform,
}

#[derive(Serialize)]
struct TweetRecordOut<'a> {
    id: &'a str,
    text: &'a str,
    source: &'a str,
}

impl Tweet {
    /// One JSONL line (without the trailing newline) in the ingestion schema.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&TweetRecordOut {
            id: &self.id,
            text: &self.text,
            source: &self.source,
        })
        .expect("string fields always serialize")
    }
}

/// Parse one JSONL record. `line_no` is only used for error reporting.
pub fn parse_tweet_record(
    line: &str,
    line_no: usize,
    table: &SourceTable,
) -> Result<Tweet, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::MalformedJson {
            line: line_no,
            message: e.to_string(),
        })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::MalformedJson {
        line: line_no,
        message: "record is not a JSON object".into(),
    })?;
    let field = |name: &'static str| -> Result<String, CorpusError> {
        match obj.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            // Numeric ids are common in tweet dumps.
            Some(serde_json::Value::Number(n)) if name == "id" => Ok(n.to_string()),
            Some(_) => Err(CorpusError::MalformedJson {
                line: line_no,
                message: format!("field `{name}` is not a string"),
            }),
            None => Err(CorpusError::MissingField {
                line: line_no,
                field: name,
            }),
        }
    };
    let id = field("id")?;
    let text = field("text")?;
    let source = field("source")?;
    let platform = table.detect(&source);
    Ok(Tweet {
        id,
        text,
        source,
        platform,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformCorpus {
    pub platform: Platform,
    pub tweets: Vec<Tweet>,
}

impl PlatformCorpus {
    pub fn new(platform: Platform) -> Self {
        PlatformCorpus {
            platform,
            tweets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.tweets {
            writeln!(out, "{}", t.to_json_line())?;
        }
        Ok(())
    }
}

/// Counts emitted next to the per-platform corpus files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub platforms: BTreeMap<Platform, usize>,
    pub dropped: usize,
    pub duplicates: usize,
}

impl PartitionCounts {
    /// `{"Android": n, ..., "dropped": n}`
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (p, n) in &self.platforms {
            map.insert(p.name().to_string(), (*n).into());
        }
        map.insert("dropped".into(), self.dropped.into());
        if self.duplicates > 0 {
            map.insert("duplicates".into(), self.duplicates.into());
        }
        serde_json::Value::Object(map)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub corpora: BTreeMap<Platform, PlatformCorpus>,
    pub counts: PartitionCounts,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PartitionOptions {
    pub dedupe_by_id: bool,
}

/// Group tweets by platform, dropping `Unknown` ones.
pub fn partition_corpus<I>(records: I, options: PartitionOptions) -> Partition
where
    I: IntoIterator<Item = Tweet>,
{
    let mut part = Partition::default();
    let mut seen = HashSet::new();
    for tweet in records {
        if options.dedupe_by_id && !seen.insert(tweet.id.clone()) {
            part.counts.duplicates += 1;
            continue;
        }
        if tweet.platform == Platform::Unknown {
            part.counts.dropped += 1;
            continue;
        }
        *part.counts.platforms.entry(tweet.platform).or_insert(0) += 1;
        part.corpora
            .entry(tweet.platform)
            .or_insert_with(|| PlatformCorpus::new(tweet.platform))
            .tweets
            .push(tweet);
    }
    part
}

/// Outcome of reading a JSONL stream: good records plus per-line failures.
#[derive(Debug, Default)]
pub struct ReadOutcome {
    pub tweets: Vec<Tweet>,
    pub errors: Vec<CorpusError>,
    /// Records that parsed but had empty text.
    pub empty_text: usize,
}

/// Read every record, collecting bad lines instead of aborting.
pub fn read_jsonl<R: BufRead>(reader: R, table: &SourceTable) -> Result<ReadOutcome, CorpusError> {
    let mut outcome = ReadOutcome::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_tweet_record(&line, i + 1, table) {
            Ok(t) if t.text.trim().is_empty() => outcome.empty_text += 1,
            Ok(t) => outcome.tweets.push(t),
            Err(e) => outcome.errors.push(e),
        }
    }
    Ok(outcome)
}

/// Load a per-platform corpus file. Every record is assigned `platform`
/// regardless of its source string, since the file itself is the partition.
pub fn read_platform_corpus<R: BufRead>(
    reader: R,
    platform: Platform,
) -> Result<PlatformCorpus, CorpusError> {
    let table = SourceTable::empty();
    let mut corpus = PlatformCorpus::new(platform);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut t = parse_tweet_record(&line, i + 1, &table)?;
        t.platform = platform;
        corpus.tweets.push(t);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, source: &str) -> Tweet {
        parse_tweet_record(
            &format!(r#"{{"id":"{id}","text":"x","source":"{source}"}}"#),
            1,
            &SourceTable::default(),
        )
        .unwrap()
    }

    #[test]
    fn parses_android_record() {
        let t = parse_tweet_record(
            r#"{"id":"1","text":"hi 😀","source":"Twitter for Android"}"#,
            1,
            &SourceTable::default(),
        )
        .unwrap();
        assert_eq!(t.platform, Platform::Android);
        assert_eq!(t.text, "hi 😀");
    }

    #[test]
    fn missing_text_is_reported() {
        let err =
            parse_tweet_record(r#"{"id":"2","source":"iOS"}"#, 4, &SourceTable::default())
                .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::MissingField {
                line: 4,
                field: "text"
            }
        ));
    }

    #[test]
    fn unlisted_source_is_unknown() {
        assert_eq!(tweet("3", "TweetDeck").platform, Platform::Unknown);
    }

    #[test]
    fn malformed_json() {
        let err = parse_tweet_record("{nope", 9, &SourceTable::default()).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedJson { line: 9, .. }));
    }

    #[test]
    fn default_table_matches_client_names() {
        assert_eq!(detect_platform("Twitter for iPhone"), Platform::Ios);
        assert_eq!(detect_platform("Twitter for iPad"), Platform::Ios);
        assert_eq!(detect_platform("iOS"), Platform::Ios);
        assert_eq!(detect_platform("Twitter Web Client"), Platform::Twitter);
        assert_eq!(detect_platform("Twitter for Windows Phone"), Platform::Windows);
        assert_eq!(detect_platform("Twitter for Windows"), Platform::Windows);
        assert_eq!(detect_platform("Twitter for Android"), Platform::Android);
        // case-sensitive
        assert_eq!(detect_platform("twitter for android"), Platform::Unknown);
    }

    #[test]
    fn table_is_extensible() {
        let mut table = SourceTable::default();
        table
            .extend_from_tsv("# extra clients\nTweetDeck\tTwitter\n")
            .unwrap();
        assert_eq!(table.detect("TweetDeck"), Platform::Twitter);
        assert!(table.extend_from_tsv("no tab here").is_err());
        assert!(table.extend_from_tsv("X\tBlackBerry").is_err());
    }

    #[test]
    fn partition_groups_and_drops() {
        let mut tweets = Vec::new();
        for i in 0..3 {
            tweets.push(tweet(&i.to_string(), "Twitter for Android"));
        }
        for i in 3..5 {
            tweets.push(tweet(&i.to_string(), "iOS"));
        }
        let part = partition_corpus(tweets, PartitionOptions::default());
        assert_eq!(part.corpora[&Platform::Android].len(), 3);
        assert_eq!(part.corpora[&Platform::Ios].len(), 2);
        assert_eq!(part.counts.dropped, 0);

        let unknown: Vec<_> = (0..5).map(|i| tweet(&i.to_string(), "Foo")).collect();
        let part = partition_corpus(unknown, PartitionOptions::default());
        assert!(part.corpora.is_empty());
        assert_eq!(part.counts.dropped, 5);
    }

    #[test]
    fn dedupe_is_opt_in() {
        let tweets = vec![tweet("1", "iOS"), tweet("1", "iOS")];
        let part = partition_corpus(tweets.clone(), PartitionOptions::default());
        assert_eq!(part.corpora[&Platform::Ios].len(), 2);
        let part = partition_corpus(tweets, PartitionOptions { dedupe_by_id: true });
        assert_eq!(part.corpora[&Platform::Ios].len(), 1);
        assert_eq!(part.counts.duplicates, 1);
    }

    #[test]
    fn counts_json_shape() {
        let part = partition_corpus(
            vec![tweet("1", "iOS"), tweet("2", "Foo")],
            PartitionOptions::default(),
        );
        assert_eq!(part.counts.to_json(), serde_json::json!({"iOS": 1, "dropped": 1}));
    }

    #[test]
    fn read_jsonl_keeps_going_after_bad_lines() {
        let input = "{\"id\":\"1\",\"text\":\"a\",\"source\":\"iOS\"}\nnot json\n{\"id\":\"2\",\"source\":\"iOS\"}\n{\"id\":\"3\",\"text\":\"b\",\"source\":\"iOS\",\"timestamp\":\"x\"}\n";
        let out = read_jsonl(input.as_bytes(), &SourceTable::default()).unwrap();
        assert_eq!(out.tweets.len(), 2);
        assert_eq!(out.errors.len(), 2);
    }
}
