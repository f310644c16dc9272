//! File-level stages of the command-line tool.
//!
//! Each stage reads its inputs from disk, writes its artifacts into the
//! configured output directory and records a manifest next to them. Stages
//! compose: the files one stage writes are the inputs of the next.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    divergence_report, neighbor_overlap_matrix, profile_all, random_sample_corpus,
    write_profiles_csv, AnalysisError, BootstrapMode, ProfileConfig, ScoredCorpus,
    SignificanceRule,
};
use crate::corpus::{
    partition_corpus, read_jsonl, read_platform_corpus, CorpusError, PartitionOptions, Platform,
    PlatformCorpus, SourceTable,
};
use crate::embedding::{
    read_emoji_embeddings, read_vocab_counts, read_word_embeddings, train_emoji_vectors,
    train_word_embedding, write_emoji_embeddings, write_vocab_counts, write_word_embeddings,
    EmbeddingError, EmbeddingMatrix, EmojiEmbeddingSet, TrainConfig,
};
use crate::eval::{
    compare_pair, sweep_significance, threshold_sweep, write_comparisons_csv, EvalConfig,
    EvalError, EvalInputs,
};
use crate::mapping::{build_mapping, read_mapping, write_mapping, ExcludedEmojis, MappingError, MappingTable};
use crate::rng::{label_hash, rng_from};
use crate::sentiment::{Lexicon, LexiconScorer, ProcessScorer, Scorer, SentimentError};
use crate::synth::{generate_tagged, SynthError, SynthSpec};
use crate::text::{EmojiInventory, TextError, TokenSeq, TokenizeConfig, TokenizedCorpus, Tokenizer};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl PipelineError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Io { .. } => "io",
            PipelineError::Corpus { .. } => "corpus",
            PipelineError::Text(_) => "text",
            PipelineError::Embedding(_) => "embedding",
            PipelineError::Mapping(_) => "mapping",
            PipelineError::Sentiment(_) => "sentiment",
            PipelineError::Analysis(_) => "analysis",
            PipelineError::Eval(_) => "eval",
            PipelineError::Synth(_) => "synth",
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Emoji inventory; the bundled one when absent.
    pub inventory: Option<PathBuf>,
    /// Stopword list; the bundled one when absent.
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub negators: Option<PathBuf>,
    /// Extra `source<TAB>platform` rows for platform detection.
    pub sources: Option<PathBuf>,
}

/// Names of the two disjoint data periods: one for training the mapping,
/// one for evaluating it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Partitions {
    pub mapping: String,
    pub eval: String,
}

impl Default for Partitions {
    fn default() -> Self {
        Partitions {
            mapping: "mapping-train".into(),
            eval: "eval".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Neighbour words compared per emoji.
    pub k: usize,
    pub bootstrap: BootstrapMode,
    pub level: f64,
    pub min_tweets: usize,
    pub rule: SignificanceRule,
    /// Add a row trained on a size-matched sample mixing all platforms.
    pub random_baseline: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k: 1000,
            bootstrap: BootstrapMode::default(),
            level: 0.95,
            min_tweets: 1,
            rule: SignificanceRule::default(),
            random_baseline: true,
        }
    }
}

/// External scorer command; the lexicon scorer is used when unset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub program: Option<PathBuf>,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Forces single-threaded training and evaluation.
    pub deterministic: bool,
    pub workers: usize,
    pub out: PathBuf,
    pub dedupe_by_id: bool,
    pub paths: Paths,
    pub partitions: Partitions,
    pub train: TrainConfig,
    pub analysis: AnalysisConfig,
    pub eval: EvalConfig,
    pub scorer: ScorerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            deterministic: false,
            workers: 1,
            out: PathBuf::from("out"),
            dedupe_by_id: false,
            paths: Paths::default(),
            partitions: Partitions::default(),
            train: TrainConfig::default(),
            analysis: AnalysisConfig::default(),
            eval: EvalConfig::default(),
            scorer: ScorerConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Defaults, then the optional file, then `overrides`, then the shared
    /// settings pushed down into the stage configs.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => PipelineConfig::from_toml(&read_string(p)?)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if overrides.deterministic {
            cfg.deterministic = true;
        }
        if let Some(w) = overrides.workers {
            cfg.workers = w;
        }
        if let Some(o) = &overrides.out {
            cfg.out = o.clone();
        }
        if let Some(l) = &overrides.lexicon {
            cfg.paths.lexicon = Some(l.clone());
        }
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Copy the master seed and threading settings into the stage configs.
    pub fn resolve(&mut self) -> Result<()> {
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        if self.partitions.mapping == self.partitions.eval {
            return Err(PipelineError::Config(format!(
                "mapping and evaluation partitions are both `{}`",
                self.partitions.eval
            )));
        }
        self.train.seed = self.seed;
        self.train.deterministic = self.deterministic;
        self.train.workers = self.workers;
        self.eval.seed = self.seed;
        self.eval.classifier.seed = self.seed;
        self.eval.workers = if self.deterministic { 1 } else { self.workers };
        self.train.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    pub fn tokenizer(&self) -> Result<Tokenizer> {
        let inventory = match &self.paths.inventory {
            Some(p) => EmojiInventory::parse(&read_string(p)?)?,
            None => EmojiInventory::builtin(),
        };
        let config = match &self.paths.stopwords {
            Some(p) => TokenizeConfig::with_stopwords(&read_string(p)?),
            None => TokenizeConfig::default(),
        };
        Ok(Tokenizer::new(config, inventory))
    }

    pub fn scorer(&self) -> Result<Box<dyn Scorer>> {
        if let Some(program) = &self.scorer.program {
            return Ok(Box::new(ProcessScorer::new(program.clone(), self.scorer.args.clone())));
        }
        let path = self.paths.lexicon.as_ref().ok_or_else(|| {
            PipelineError::Config("no lexicon configured (paths.lexicon or --lexicon)".into())
        })?;
        let mut lexicon = Lexicon::parse(&read_string(path)?)?;
        if let Some(n) = &self.paths.negators {
            lexicon.set_negators(&read_string(n)?);
        }
        Ok(Box::new(LexiconScorer::new(lexicon)))
    }

    fn source_table(&self) -> Result<SourceTable> {
        let mut table = SourceTable::default();
        if let Some(p) = &self.paths.sources {
            table
                .extend_from_tsv(&read_string(p)?)
                .map_err(|source| PipelineError::Corpus { path: p.clone(), source })?;
        }
        Ok(table)
    }

    fn profile_config(&self) -> ProfileConfig {
        ProfileConfig {
            bootstrap: self.analysis.bootstrap,
            level: self.analysis.level,
            seed: self.seed,
            min_tweets: self.analysis.min_tweets,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a stage: the resolved configuration, the
/// inputs with their digests and the files written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub deterministic: bool,
    pub workers: usize,
    pub config_sha256: String,
    pub config: PipelineConfig,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

/// What a stage wrote, plus a short machine-readable summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub subcommand: String,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

struct Stage<'a> {
    cfg: &'a PipelineConfig,
    name: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl<'a> Stage<'a> {
    fn new(cfg: &'a PipelineConfig, name: &'static str) -> Result<Self> {
        fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
        Ok(Stage {
            cfg,
            name,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Write through a buffered file in the output directory.
    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.cfg.out.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        body(&mut w)?;
        w.flush().map_err(io_err(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_str(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.cfg.out.join(name);
        self.write(name, |w| w.write_all(contents.as_bytes()).map_err(io_err(&path)))
    }

    fn finish(self, summary: serde_json::Value) -> Result<StageReport> {
        let mut inputs = Vec::with_capacity(self.inputs.len());
        for p in &self.inputs {
            let bytes = fs::read(p).map_err(io_err(p))?;
            inputs.push(InputRecord {
                path: p.display().to_string(),
                sha256: hex(&Sha256::digest(&bytes)),
            });
        }
        let manifest = Manifest {
            tool: "emojimap",
            version: VERSION,
            subcommand: self.name.to_string(),
            seed: self.cfg.seed,
            deterministic: self.cfg.deterministic,
            workers: self.cfg.workers,
            config_sha256: self.cfg.sha256(),
            config: self.cfg.clone(),
            inputs,
            outputs: self.outputs.clone(),
        };
        let path = self.cfg.out.join(format!("manifest-{}.json", self.name));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(StageReport {
            subcommand: self.name.to_string(),
            outputs: self.outputs,
            summary,
        })
    }
}

/// Platform named by a file stem such as `iOS.jsonl` or `emoji-iOS.vec`.
pub fn platform_of(path: &Path) -> Result<Platform> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let name = stem.rsplit('-').next().unwrap_or(stem);
    Platform::from_str(name).map_err(|_| {
        PipelineError::Config(format!(
            "cannot tell the platform of {}; name it <Platform>.jsonl",
            path.display()
        ))
    })
}

pub fn corpus_file_name(platform: Platform) -> String {
    format!("{platform}.jsonl")
}

pub fn emoji_file_name(platform: Platform) -> String {
    format!("emoji-{platform}.vec")
}

pub fn mapping_file_name(source: Platform, target: Platform) -> String {
    format!("map-{source}-{target}.tsv")
}

pub const WORDS_FILE: &str = "words.vec";
pub const VOCAB_FILE: &str = "words.vocab";

fn load_corpus(path: &Path) -> Result<PlatformCorpus> {
    let platform = platform_of(path)?;
    read_platform_corpus(open(path)?, platform).map_err(|source| PipelineError::Corpus {
        path: path.to_path_buf(),
        source,
    })
}

fn load_tokenized(tok: &Tokenizer, path: &Path) -> Result<TokenizedCorpus> {
    Ok(tok.tokenize_corpus(&load_corpus(path)?))
}

/// Word matrix plus its count sidecar, when present next to it.
pub fn load_words(path: &Path) -> Result<EmbeddingMatrix> {
    let mut m = read_word_embeddings(open(path)?)?;
    let sidecar = path.with_extension("vocab");
    if sidecar.exists() {
        read_vocab_counts(open(&sidecar)?, &mut m)?;
    }
    Ok(m)
}

pub fn load_emoji_set(path: &Path) -> Result<EmojiEmbeddingSet> {
    Ok(read_emoji_embeddings(open(path)?)?)
}

pub fn load_mapping(path: &Path) -> Result<MappingTable> {
    Ok(read_mapping(open(path)?)?)
}

/// Split raw JSONL dumps into one corpus file per platform.
pub fn ingest(cfg: &PipelineConfig, inputs: &[PathBuf]) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "ingest")?;
    let table = cfg.source_table()?;
    let mut tweets = Vec::new();
    let mut rejected = 0;
    let mut empty = 0;
    for path in inputs {
        stage.input(path);
        let outcome = read_jsonl(open(path)?, &table).map_err(|source| PipelineError::Corpus {
            path: path.clone(),
            source,
        })?;
        for e in &outcome.errors {
            eprintln!("{}: skipped record: {e}", path.display());
        }
        rejected += outcome.errors.len();
        empty += outcome.empty_text;
        tweets.extend(outcome.tweets);
    }
    let part = partition_corpus(
        tweets,
        PartitionOptions {
            dedupe_by_id: cfg.dedupe_by_id,
        },
    );
    for (platform, corpus) in &part.corpora {
        let name = corpus_file_name(*platform);
        let path = cfg.out.join(&name);
        stage.write(&name, |w| corpus.write_jsonl(w).map_err(io_err(&path)))?;
    }
    let counts = part.counts.to_json();
    stage.write_str("counts.json", &(serde_json::to_string_pretty(&counts).expect("json") + "\n"))?;
    stage.finish(serde_json::json!({
        "counts": counts,
        "rejected": rejected,
        "empty_text": empty,
        "duplicates": part.counts.duplicates,
    }))
}

/// Train the shared word matrix on the emoji-free union of the corpora.
pub fn train_words(cfg: &PipelineConfig, corpora: &[PathBuf]) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "train-words")?;
    let tok = cfg.tokenizer()?;
    let mut union: Vec<TokenSeq> = Vec::new();
    for path in corpora {
        stage.input(path);
        union.extend(load_tokenized(&tok, path)?.stripped().tweets);
    }
    let matrix = train_word_embedding(&union, &cfg.train)?;
    stage.write(WORDS_FILE, |w| Ok(write_word_embeddings(&matrix, w)?))?;
    stage.write(VOCAB_FILE, |w| Ok(write_vocab_counts(matrix.vocab(), w)?))?;
    stage.finish(serde_json::json!({
        "vocab": matrix.len(),
        "dim": matrix.dim(),
        "tweets": union.len(),
    }))
}

/// Fit one platform's emoji vectors against the frozen word matrix.
pub fn train_emoji(cfg: &PipelineConfig, words: &Path, corpus: &Path) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "train-emoji")?;
    stage.input(words);
    stage.input(corpus);
    let matrix = load_words(words)?;
    let tokenized = load_tokenized(&cfg.tokenizer()?, corpus)?;
    let set = train_emoji_vectors(&tokenized, &matrix, &cfg.train)?;
    stage.write(&emoji_file_name(set.platform), |w| Ok(write_emoji_embeddings(&set, w)?))?;
    stage.finish(serde_json::json!({
        "platform": set.platform,
        "emojis": set.len(),
    }))
}

/// Map every emoji shared by the two sets to its nearest target emoji.
pub fn build_map(cfg: &PipelineConfig, source: &Path, target: &Path) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "build-map")?;
    stage.input(source);
    stage.input(target);
    let s = load_emoji_set(source)?;
    let t = load_emoji_set(target)?;
    let table = build_mapping(&s, &t)?;
    let excluded = ExcludedEmojis::between(&s, &t);
    let name = mapping_file_name(s.platform, t.platform);
    stage.write(&name, |w| Ok(write_mapping(&table, w)?))?;
    let changed = table.entries().filter(|e| e.source_emoji != e.target_emoji).count();
    stage.finish(serde_json::json!({
        "mapped": table.len(),
        "changed": changed,
        "source_only": excluded.source_only.len(),
        "target_only": excluded.target_only.len(),
    }))
}

/// Neighbour-overlap matrix of the given emoji sets, optionally with a row
/// for an emoji set trained on a random mix of the given corpora.
pub fn jaccard(
    cfg: &PipelineConfig,
    words: &Path,
    sets: &[PathBuf],
    baseline_corpora: &[PathBuf],
) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "jaccard")?;
    stage.input(words);
    let matrix = load_words(words)?;
    let mut loaded = Vec::new();
    for p in sets {
        stage.input(p);
        let set = load_emoji_set(p)?;
        loaded.push((set.platform.to_string(), set));
    }
    if cfg.analysis.random_baseline && !baseline_corpora.is_empty() {
        let tok = cfg.tokenizer()?;
        let mut corpora = Vec::new();
        for p in baseline_corpora {
            stage.input(p);
            corpora.push(load_tokenized(&tok, p)?);
        }
        let size = corpora.iter().map(|c| c.len()).sum::<usize>() / corpora.len();
        let refs: Vec<&TokenizedCorpus> = corpora.iter().collect();
        let mut rng = rng_from(cfg.seed, &[label_hash("random-baseline")]);
        let sample = random_sample_corpus(&refs, size, &mut rng);
        let set = train_emoji_vectors(&sample, &matrix, &cfg.train)?;
        loaded.push(("Random".to_string(), set));
    }
    let k = cfg.analysis.k.min(matrix.len());
    let pairs: Vec<(String, &EmojiEmbeddingSet)> = loaded.iter().map(|(l, s)| (l.clone(), s)).collect();
    let overlap = neighbor_overlap_matrix(&pairs, &matrix, k)?;
    let path = cfg.out.join("overlap.csv");
    stage.write("overlap.csv", |w| overlap.write_csv(w).map_err(io_err(&path)))?;
    stage.finish(serde_json::json!({ "labels": overlap.labels, "k": k }))
}

fn scored_corpora(
    cfg: &PipelineConfig,
    stage: &mut Stage<'_>,
    corpora: &[PathBuf],
) -> Result<Vec<(TokenizedCorpus, Vec<f64>)>> {
    let tok = cfg.tokenizer()?;
    let scorer = cfg.scorer()?;
    let mut out = Vec::new();
    for p in corpora {
        stage.input(p);
        let c = load_tokenized(&tok, p)?;
        let scores = ScoredCorpus::new(&c, scorer.as_ref())?.scores;
        out.push((c, scores));
    }
    if let Some(l) = &cfg.paths.lexicon {
        if cfg.scorer.program.is_none() {
            stage.input(l);
        }
    }
    Ok(out)
}

/// Bias-corrected sentiment profile of every emoji on every platform.
pub fn profile(cfg: &PipelineConfig, corpora: &[PathBuf]) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "profile")?;
    let owned = scored_corpora(cfg, &mut stage, corpora)?;
    let scored: Vec<ScoredCorpus<'_>> =
        owned.iter().map(|(c, s)| ScoredCorpus::from_scores(c, s.clone())).collect();
    let profiles = profile_all(&scored, &cfg.profile_config())?;
    let path = cfg.out.join("profiles.csv");
    stage.write("profiles.csv", |w| write_profiles_csv(&profiles, w).map_err(io_err(&path)))?;
    stage.finish(serde_json::json!({ "profiles": profiles.len() }))
}

/// Share of emojis and tweets affected by significant cross-platform
/// differences.
pub fn scale(cfg: &PipelineConfig, corpora: &[PathBuf], background: Option<&Path>) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "scale")?;
    let owned = scored_corpora(cfg, &mut stage, corpora)?;
    let scored: Vec<ScoredCorpus<'_>> =
        owned.iter().map(|(c, s)| ScoredCorpus::from_scores(c, s.clone())).collect();
    let profiles = profile_all(&scored, &cfg.profile_config())?;
    let bg: Option<Vec<TokenSeq>> = match background {
        Some(p) => {
            stage.input(p);
            let tok = cfg.tokenizer()?;
            let outcome = read_jsonl(open(p)?, &SourceTable::empty()).map_err(|source| {
                PipelineError::Corpus {
                    path: p.to_path_buf(),
                    source,
                }
            })?;
            Some(outcome.tweets.iter().map(|t| tok.tokenize(&t.text)).collect())
        }
        None => None,
    };
    let report = divergence_report(&profiles, &scored, cfg.analysis.rule, bg.as_deref())?;
    let path = cfg.out.join("profiles.csv");
    stage.write("profiles.csv", |w| write_profiles_csv(&profiles, w).map_err(io_err(&path)))?;
    stage.write_str("divergence.json", &(report.to_json() + "\n"))?;
    stage.finish(serde_json::json!({
        "divergent_fraction": report.divergent_fraction,
        "tweet_fraction": report.tweet_fraction,
        "sample_fraction": report.sample_fraction,
    }))
}

/// Files consumed by `evaluate` and `sweep`. The mapping must send target
/// emojis to source emojis and come from the mapping partition; the corpora
/// come from the evaluation partition.
#[derive(Debug, Clone)]
pub struct EvalFiles {
    pub words: PathBuf,
    pub source_emoji: PathBuf,
    pub target_emoji: PathBuf,
    pub mapping: PathBuf,
    pub source_corpus: PathBuf,
    pub target_corpus: PathBuf,
}

struct EvalData {
    words: EmbeddingMatrix,
    source_set: EmojiEmbeddingSet,
    target_set: EmojiEmbeddingSet,
    table: MappingTable,
    source: TokenizedCorpus,
    target: TokenizedCorpus,
    source_scores: Vec<f64>,
    target_scores: Vec<f64>,
}

fn load_eval(cfg: &PipelineConfig, stage: &mut Stage<'_>, files: &EvalFiles) -> Result<EvalData> {
    for p in [&files.words, &files.source_emoji, &files.target_emoji, &files.mapping] {
        stage.input(p);
    }
    let scored = scored_corpora(cfg, stage, &[files.source_corpus.clone(), files.target_corpus.clone()])?;
    let mut it = scored.into_iter();
    let (source, source_scores) = it.next().expect("two corpora");
    let (target, target_scores) = it.next().expect("two corpora");
    Ok(EvalData {
        words: load_words(&files.words)?,
        source_set: load_emoji_set(&files.source_emoji)?,
        target_set: load_emoji_set(&files.target_emoji)?,
        table: load_mapping(&files.mapping)?,
        source,
        target,
        source_scores,
        target_scores,
    })
}

impl EvalData {
    fn inputs<'a>(&'a self, cfg: &'a PipelineConfig) -> EvalInputs<'a> {
        EvalInputs {
            words: &self.words,
            source_set: &self.source_set,
            target_set: &self.target_set,
            table: &self.table,
            mapping_partition: &cfg.partitions.mapping,
            eval_partition: &cfg.partitions.eval,
        }
    }

    fn scored(&self) -> (ScoredCorpus<'_>, ScoredCorpus<'_>) {
        (
            ScoredCorpus::from_scores(&self.source, self.source_scores.clone()),
            ScoredCorpus::from_scores(&self.target, self.target_scores.clone()),
        )
    }
}

/// Compare the three representations at one threshold.
pub fn evaluate(cfg: &PipelineConfig, files: &EvalFiles, threshold: f64) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "evaluate")?;
    let data = load_eval(cfg, &mut stage, files)?;
    let (s, t) = data.scored();
    let report = compare_pair(&s, &t, threshold, &data.inputs(cfg), &cfg.eval)?;
    stage.write_str(
        "comparison.json",
        &(serde_json::to_string_pretty(&report).expect("json") + "\n"),
    )?;
    let path = cfg.out.join("comparison.csv");
    stage.write("comparison.csv", |w| write_comparisons_csv(&[&report], w).map_err(io_err(&path)))?;
    stage.finish(serde_json::json!({
        "a1": report.a1,
        "a2": report.a2,
        "delta": report.delta,
        "no_emojis": report.no_emojis_accuracy,
    }))
}

/// Compare the representations over the configured thresholds and test
/// whether the mapping beats the unmapped representation.
pub fn sweep(cfg: &PipelineConfig, files: &EvalFiles) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "sweep")?;
    let data = load_eval(cfg, &mut stage, files)?;
    let (s, t) = data.scored();
    let entries = threshold_sweep(&s, &t, &cfg.eval.thresholds, &data.inputs(cfg), &cfg.eval)?;
    let significance = sweep_significance(&entries, cfg.eval.paired).ok();
    let doc = serde_json::json!({
        "entries": entries,
        "significance": significance,
        "paired": cfg.eval.paired,
    });
    stage.write_str("sweep.json", &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    let reports: Vec<_> = entries.iter().filter_map(|e| e.report.as_ref()).collect();
    let path = cfg.out.join("sweep.csv");
    stage.write("sweep.csv", |w| write_comparisons_csv(&reports, w).map_err(io_err(&path)))?;
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    stage.finish(serde_json::json!({
        "thresholds": entries.len(),
        "failed": failed,
        "significance": significance,
    }))
}

/// Write a synthetic corpus per platform, its ground-truth mappings and its
/// lexicon. `tag` selects the tweet stream; equal specs with different tags
/// share everything but the tweets.
pub fn synth(cfg: &PipelineConfig, spec: &SynthSpec, tag: &str) -> Result<StageReport> {
    let mut stage = Stage::new(cfg, "synth")?;
    let out = generate_tagged(spec, tag)?;
    for (platform, corpus) in &out.corpora {
        let name = corpus_file_name(*platform);
        let path = cfg.out.join(&name);
        stage.write(&name, |w| corpus.write_jsonl(w).map_err(io_err(&path)))?;
    }
    for (platform, table) in &out.truth {
        stage.write(&format!("truth-{platform}-{}.tsv", table.target_platform), |w| {
            Ok(write_mapping(table, w)?)
        })?;
    }
    stage.write_str("lexicon.tsv", &out.lexicon.to_tsv())?;
    stage.write_str("synth-spec.json", &(spec.to_json() + "\n"))?;
    stage.finish(serde_json::json!({
        "platforms": out.corpora.len(),
        "tweets": out.corpora.values().map(|c| c.len()).sum::<usize>(),
        "tag": tag,
    }))
}

/// Every stage in order on synthetic data, under `cfg.out`:
/// `synth/<partition>/` for the two corpus draws, `embed/` for the word
/// matrix, emoji sets and mappings (mapping partition), `analysis/` for the
/// overlap matrix and sentiment reports, and `eval/` for the sweep of the
/// reference platform against each other platform.
pub fn run_synthetic(cfg: &PipelineConfig, spec: &SynthSpec) -> Result<Vec<StageReport>> {
    let sub = |dir: &str| {
        let mut c = cfg.clone();
        c.out = cfg.out.join(dir);
        c
    };
    let mut reports = Vec::new();
    let map_dir = format!("synth/{}", cfg.partitions.mapping);
    let eval_dir = format!("synth/{}", cfg.partitions.eval);
    reports.push(synth(&sub(&map_dir), spec, &cfg.partitions.mapping)?);
    reports.push(synth(&sub(&eval_dir), spec, &cfg.partitions.eval)?);

    let mut with_lex = cfg.clone();
    if with_lex.paths.lexicon.is_none() && with_lex.scorer.program.is_none() {
        with_lex.paths.lexicon = Some(cfg.out.join(&map_dir).join("lexicon.tsv"));
    }
    let in_sub = |dir: &str| {
        let mut c = with_lex.clone();
        c.out = cfg.out.join(dir);
        c
    };
    let platforms: Vec<Platform> = spec.platforms.iter().map(|p| p.platform).collect();
    let map_corpora: Vec<PathBuf> = platforms
        .iter()
        .map(|p| cfg.out.join(&map_dir).join(corpus_file_name(*p)))
        .collect();
    let eval_corpora: Vec<PathBuf> = platforms
        .iter()
        .map(|p| cfg.out.join(&eval_dir).join(corpus_file_name(*p)))
        .collect();

    let embed = in_sub("embed");
    reports.push(train_words(&embed, &map_corpora)?);
    let words = embed.out.join(WORDS_FILE);
    for c in &map_corpora {
        reports.push(train_emoji(&embed, &words, c)?);
    }
    let sets: Vec<PathBuf> = platforms.iter().map(|p| embed.out.join(emoji_file_name(*p))).collect();
    let reference = platforms[0];
    for (k, &p) in platforms.iter().enumerate().skip(1) {
        reports.push(build_map(&embed, &sets[k], &sets[0])?);
        let files = EvalFiles {
            words: words.clone(),
            source_emoji: sets[0].clone(),
            target_emoji: sets[k].clone(),
            mapping: embed.out.join(mapping_file_name(p, reference)),
            source_corpus: eval_corpora[0].clone(),
            target_corpus: eval_corpora[k].clone(),
        };
        reports.push(sweep(&in_sub(&format!("eval/{reference}-{p}")), &files)?);
    }

    let analysis = in_sub("analysis");
    if platforms.len() >= 2 {
        reports.push(jaccard(&analysis, &words, &sets, &map_corpora)?);
        reports.push(scale(&analysis, &eval_corpora, None)?);
    }
    reports.push(profile(&analysis, &eval_corpora)?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Correspondence, PlatformCount};

    fn tiny_spec() -> SynthSpec {
        SynthSpec {
            vocab_size: 400,
            platforms: vec![
                PlatformCount { platform: Platform::Ios, tweets: 600 },
                PlatformCount { platform: Platform::Android, tweets: 600 },
            ],
            emojis: 4,
            pool_size: 20,
            sentiment_words: 20,
            correspondence: Correspondence::SwapPairs,
            ..SynthSpec::default()
        }
    }

    fn tiny_config(out: &Path) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            out: out.to_path_buf(),
            deterministic: true,
            ..PipelineConfig::default()
        };
        cfg.train.epochs = 2;
        cfg.train.emoji_min_count = 10;
        cfg.analysis.k = 50;
        cfg.eval.thresholds = vec![0.2, 0.6];
        cfg.resolve().unwrap();
        cfg
    }

    #[test]
    fn layering_prefers_flags_over_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "seed = 5\nworkers = 3\n[train]\ndim = 8\n").unwrap();
        let cfg = PipelineConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!((cfg.seed, cfg.workers, cfg.train.dim, cfg.train.seed), (5, 3, 8, 5));
        let cfg = PipelineConfig::load(
            Some(&path),
            &Overrides { seed: Some(9), deterministic: true, ..Overrides::default() },
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.train.seed, cfg.eval.workers), (9, 9, 1));
        assert!(cfg.train.deterministic);
        assert_eq!(PipelineConfig::load(None, &Overrides::default()).unwrap().train.dim, 20);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(PipelineConfig::from_toml("bogus = 1"), Err(PipelineError::Config(_))));
        let mut cfg = PipelineConfig::default();
        cfg.partitions.eval = cfg.partitions.mapping.clone();
        assert!(matches!(cfg.resolve(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn platform_from_file_names() {
        assert_eq!(platform_of(Path::new("a/iOS.jsonl")).unwrap(), Platform::Ios);
        assert_eq!(platform_of(Path::new("emoji-Android.vec")).unwrap(), Platform::Android);
        assert!(platform_of(Path::new("tweets.jsonl")).is_err());
    }

    #[test]
    fn ingest_splits_by_platform() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("raw.jsonl");
        fs::write(
            &raw,
            concat!(
                r#"{"id":"1","text":"hi 😀","source":"Twitter for Android"}"#, "\n",
                r#"{"id":"2","source":"iOS"}"#, "\n",
                r#"{"id":"3","text":"x","source":"TweetDeck"}"#, "\n",
                r#"{"id":"4","text":"yo","source":"Twitter for iPhone"}"#, "\n",
            ),
        )
        .unwrap();
        let cfg = tiny_config(&dir.path().join("out"));
        let r = ingest(&cfg, &[raw]).unwrap();
        assert_eq!(r.summary["rejected"], 1);
        let counts: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(cfg.out.join("counts.json")).unwrap()).unwrap();
        assert_eq!(counts, serde_json::json!({"Android": 1, "iOS": 1, "dropped": 1}));
        assert!(cfg.out.join("Android.jsonl").exists());
        assert!(cfg.out.join("manifest-ingest.json").exists());
    }

    #[test]
    fn synthetic_run_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let reports = run_synthetic(&cfg, &tiny_spec()).unwrap();
        assert!(reports.len() >= 9);
        for f in [
            "embed/words.vec",
            "embed/emoji-iOS.vec",
            "embed/map-Android-iOS.tsv",
            "eval/iOS-Android/sweep.json",
            "analysis/overlap.csv",
            "analysis/divergence.json",
            "analysis/profiles.csv",
            "synth/eval/truth-Android-iOS.tsv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let m: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("embed/manifest-train-words.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
        assert_eq!(m["seed"], 1);
    }
}
