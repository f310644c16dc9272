//! `emojimap`: run the emoji embedding, mapping, analysis and evaluation
//! stages over files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emojimap::pipeline::{self, EvalFiles, Overrides, PipelineConfig, PipelineError, StageReport};
use emojimap::synth::SynthSpec;

#[derive(Debug, Parser)]
#[command(name = "emojimap", version, about = "Cross-platform emoji embeddings, mappings and sentiment analysis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded, bit-reproducible run.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sentiment lexicon TSV (`word<TAB>polarity`).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    words: PathBuf,
    /// Emoji vectors of the platform the mapping maps into.
    #[arg(long)]
    source_emoji: PathBuf,
    /// Emoji vectors of the platform whose tweets get mapped.
    #[arg(long)]
    target_emoji: PathBuf,
    /// Mapping from target emojis to source emojis, built on the mapping partition.
    #[arg(long)]
    mapping: PathBuf,
    #[arg(long)]
    source_corpus: PathBuf,
    #[arg(long)]
    target_corpus: PathBuf,
}

impl From<EvalArgs> for EvalFiles {
    fn from(a: EvalArgs) -> Self {
        EvalFiles {
            words: a.words,
            source_emoji: a.source_emoji,
            target_emoji: a.target_emoji,
            mapping: a.mapping,
            source_corpus: a.source_corpus,
            target_corpus: a.target_corpus,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split JSONL tweet dumps into one corpus file per platform.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        dedupe_by_id: bool,
    },
    /// Train the shared word embedding on the emoji-free union of corpora.
    TrainWords {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
    },
    /// Fit one platform's emoji vectors against a frozen word embedding.
    TrainEmoji {
        #[arg(long)]
        words: PathBuf,
        corpus: PathBuf,
    },
    /// Map each source emoji to its most similar target emoji.
    BuildMap {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Neighbour-word overlap between platforms' emoji vectors.
    Jaccard {
        #[arg(long)]
        words: PathBuf,
        #[arg(required = true)]
        sets: Vec<PathBuf>,
        /// Corpora mixed into the random baseline row.
        #[arg(long = "baseline-corpus")]
        baseline_corpora: Vec<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Bias-corrected sentiment of every emoji on every platform.
    Profile {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
    },
    /// Share of emojis and tweets with significant cross-platform differences.
    Scale {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        /// JSONL sample of all tweets, emoji or not.
        #[arg(long)]
        background: Option<PathBuf>,
    },
    /// Compare the mapped, unmapped and emoji-free representations.
    Evaluate {
        #[command(flatten)]
        files: EvalArgs,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
    },
    /// Evaluate over a grid of thresholds and test the mapping's effect.
    Sweep {
        #[command(flatten)]
        files: EvalArgs,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Pair the test by threshold instead of pooling folds.
        #[arg(long)]
        paired: bool,
    },
    /// Generate synthetic corpora with planted emoji correspondences.
    Synth {
        /// SynthSpec JSON; the default spec when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Tweet stream name; different tags give independent draws.
        #[arg(long, default_value = "")]
        tag: String,
    },
    /// Every stage in order on synthetic data.
    Run {
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

fn read_spec(path: Option<&PathBuf>) -> Result<SynthSpec, PipelineError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| PipelineError::Io {
                path: p.clone(),
                source,
            })?;
            Ok(SynthSpec::from_json(&text)?)
        }
        None => Ok(SynthSpec::default()),
    }
}

fn run(cli: Cli) -> Result<Vec<StageReport>, PipelineError> {
    let overrides = Overrides {
        seed: cli.global.seed,
        deterministic: cli.global.deterministic,
        workers: cli.global.workers,
        out: cli.global.out.clone(),
        lexicon: cli.global.lexicon.clone(),
    };
    let mut cfg = PipelineConfig::load(cli.global.config.as_deref(), &overrides)?;
    let one = |r: Result<StageReport, PipelineError>| r.map(|r| vec![r]);
    match cli.command {
        Command::Ingest { inputs, dedupe_by_id } => {
            cfg.dedupe_by_id |= dedupe_by_id;
            one(pipeline::ingest(&cfg, &inputs))
        }
        Command::TrainWords { corpora } => one(pipeline::train_words(&cfg, &corpora)),
        Command::TrainEmoji { words, corpus } => one(pipeline::train_emoji(&cfg, &words, &corpus)),
        Command::BuildMap { source, target } => one(pipeline::build_map(&cfg, &source, &target)),
        Command::Jaccard { words, sets, baseline_corpora, k } => {
            if let Some(k) = k {
                cfg.analysis.k = k;
            }
            one(pipeline::jaccard(&cfg, &words, &sets, &baseline_corpora))
        }
        Command::Profile { corpora } => one(pipeline::profile(&cfg, &corpora)),
        Command::Scale { corpora, background } => {
            one(pipeline::scale(&cfg, &corpora, background.as_deref()))
        }
        Command::Evaluate { files, threshold } => {
            one(pipeline::evaluate(&cfg, &files.into(), threshold))
        }
        Command::Sweep { files, thresholds, paired } => {
            if let Some(t) = thresholds {
                cfg.eval.thresholds = t;
            }
            cfg.eval.paired |= paired;
            one(pipeline::sweep(&cfg, &files.into()))
        }
        Command::Synth { spec, tag } => one(pipeline::synth(&cfg, &read_spec(spec.as_ref())?, &tag)),
        Command::Run { spec } => pipeline::run_synthetic(&cfg, &read_spec(spec.as_ref())?),
    }
}

fn error_line(kind: &str, message: &str) -> String {
    let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_line("usage", &e.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(reports) => {
            for r in reports {
                println!("{}", serde_json::to_string(&r).expect("report serializes"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
