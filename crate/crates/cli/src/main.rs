//! `semeval`: evaluation reports for decoded text.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semeval_core::corpus::Condition;
use semeval_core::metrics::{DistDenominator, RecallAggregation, Smoothing};
use semeval_core::protocol::ReportFormat;
use semeval_core::semantic::EmbeddingFormat;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] semeval_core::Error),
}

#[derive(Debug, Parser)]
#[command(name = "semeval", version, about = "Semantic evaluation reports for decoded text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Settings file with `key = value` lines; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Report format: json, csv or markdown (default: from --out extension, else json).
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

/// Where embeddings come from when no file is given for a role.
#[derive(Debug, Args, Clone)]
pub struct EmbedService {
    /// Embedding service base URL; falls back to $SEMEVAL_EMBED_ENDPOINT.
    #[arg(long, value_name = "URL")]
    pub embed_endpoint: Option<String>,
    /// Texts per service request.
    #[arg(long, value_name = "N")]
    pub embed_batch: Option<usize>,
    /// L2-normalize embeddings before FD (and ask the service for unit vectors).
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true", value_parser = config::parse_bool)]
    pub normalize_embeddings: Option<bool>,
}

#[derive(Debug, Args, Clone)]
pub struct MetricOpts {
    /// Stop list file (default: bundled English list).
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Dist-n denominator: tokens or ngrams.
    #[arg(long)]
    pub dist_denominator: Option<DistDenominator>,
    /// Content Recall aggregation: micro or macro.
    #[arg(long)]
    pub recall_aggregation: Option<RecallAggregation>,
    /// Self-BLEU order.
    #[arg(long, value_name = "N")]
    pub self_bleu_order: Option<usize>,
    /// Self-BLEU smoothing: none, epsilon or epsilon:<value>.
    #[arg(long, value_name = "MODE")]
    pub self_bleu_smoothing: Option<Smoothing>,
}

#[derive(Debug, Args, Clone)]
pub struct RetrievalOpts {
    /// Comma-separated N values for N-way retrieval.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub n_ways: Option<Vec<usize>>,
    /// Independent negative-sampling runs.
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct HypOpts {
    /// Hypotheses JSONL (`{"id", "hyp"}` lines, optional header).
    #[arg(long, value_name = "FILE")]
    pub hyps: PathBuf,
    /// System name (overrides the file header).
    #[arg(long)]
    pub system: Option<String>,
    /// Condition tag: real or noise (overrides the file header).
    #[arg(long)]
    pub condition: Option<Condition>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Retrieval, Content Recall, Dist-1/2, Head Entropy, Self-BLEU and FD.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Corpus JSONL (`{"id", "text", "mtv"?, ...}` lines).
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,
        #[command(flatten)]
        hyp: HypOpts,
        /// Reference embeddings (.semb or .jsonl).
        #[arg(long, value_name = "FILE")]
        emb_refs: Option<PathBuf>,
        /// Hypothesis embeddings (.semb or .jsonl).
        #[arg(long, value_name = "FILE")]
        emb_hyps: Option<PathBuf>,
        #[command(flatten)]
        service: EmbedService,
        #[command(flatten)]
        retrieval: RetrievalOpts,
        #[command(flatten)]
        metrics: MetricOpts,
    },
    /// Corpus BLEU-1/2 against paraphrase pools and against the ground truth.
    Bleu {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,
        #[command(flatten)]
        hyp: HypOpts,
        /// none, epsilon or epsilon:<value>.
        #[arg(long, value_name = "MODE")]
        smoothing: Option<Smoothing>,
    },
    /// N-way retrieval accuracy over paired embeddings.
    Retrieval {
        #[command(flatten)]
        common: Common,
        /// Candidate (reference) embeddings.
        #[arg(long, value_name = "FILE")]
        emb_refs: PathBuf,
        /// Query (hypothesis) embeddings.
        #[arg(long, value_name = "FILE")]
        emb_hyps: PathBuf,
        /// Single N, shorthand for --n-ways N.
        #[arg(long, conflicts_with = "n_ways")]
        n: Option<usize>,
        #[command(flatten)]
        retrieval: RetrievalOpts,
    },
    /// Fréchet distance between two embedding sets.
    Fd {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        emb_refs: PathBuf,
        #[arg(long, value_name = "FILE")]
        emb_hyps: PathBuf,
        #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true", value_parser = config::parse_bool)]
        normalize_embeddings: Option<bool>,
    },
    /// Real-input versus noise-input comparison.
    Noise {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,
        /// Hypotheses decoded from real inputs.
        #[arg(long, value_name = "FILE")]
        real: PathBuf,
        /// Hypotheses decoded from noise inputs.
        #[arg(long, value_name = "FILE")]
        noise: PathBuf,
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_name = "FILE")]
        emb_refs: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        emb_real: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        emb_noise: Option<PathBuf>,
        #[command(flatten)]
        service: EmbedService,
        #[command(flatten)]
        metrics: MetricOpts,
    },
    /// BLEU-1..4 before and after stripping stock openings.
    Prefix {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        refs: PathBuf,
        #[command(flatten)]
        hyp: HypOpts,
        /// Prefix list file, one phrase per line.
        #[arg(long, value_name = "FILE")]
        prefixes: Option<PathBuf>,
        /// Extra prefix phrase; repeatable.
        #[arg(long = "prefix", value_name = "PHRASE")]
        extra: Vec<String>,
    },
    /// Chance and training-median baselines for the attribute tasks.
    Baselines {
        #[command(flatten)]
        common: Common,
        /// Training split corpus with attribute labels.
        #[arg(long, value_name = "FILE")]
        train: PathBuf,
        /// Evaluation split corpus with attribute labels.
        #[arg(long = "eval", value_name = "FILE")]
        eval_split: PathBuf,
        /// Comma-separated sentiment classes (default: labels seen in the data).
        #[arg(long, value_delimiter = ',')]
        sentiment_classes: Option<Vec<String>>,
        /// Comma-separated topic classes (default: labels seen in the data).
        #[arg(long, value_delimiter = ',')]
        topic_classes: Option<Vec<String>>,
    },
    /// Merge labeled embedding sets into one file for projection tools.
    EmbedExport {
        #[command(flatten)]
        common: Common,
        /// `label=path`; repeatable.
        #[arg(long = "set", value_name = "LABEL=FILE", required = true)]
        sets: Vec<String>,
        /// Output encoding: binary or jsonl (default: from --out extension).
        #[arg(long)]
        emb_format: Option<EmbeddingFormat>,
    },
    /// Run the built-in oracle checks.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            eprintln!("Run with --help for usage.");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {line}", e.kind());
            ExitCode::from(1)
        }
    }
}
