use std::net::SocketAddr;
use std::path::PathBuf;

use adwatch::ModelKind;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

/// Audit political advertising: build corpora, train and evaluate
/// classifiers, flag undeclared political ads and serve the results.
#[derive(Debug, Parser)]
#[command(name = "adwatch", version, propagate_version = true)]
pub struct Cli {
    /// Directory holding the default input files (labeled.jsonl,
    /// corpus.jsonl, declared.jsonl, embeddings.txt).
    #[arg(long, global = true, env = "ADWATCH_DATA_DIR", default_value = ".")]
    pub data_dir: PathBuf,

    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL ad file and write the accepted records.
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus with ground truth.
    GenSynthetic {
        #[arg(long)]
        seed: u64,
        /// Output directory; defaults to the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        labeled: Option<usize>,
        #[arg(long)]
        corpus_rows: Option<usize>,
        #[arg(long)]
        declared_only: Option<usize>,
    },
    /// Keep one ad per normalized caption.
    Dedup {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Keep ads by language and first-seen date.
    Filter {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        language: Option<String>,
        #[command(flatten)]
        period: PeriodArgs,
    },
    /// Train a classifier on a labeled file.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Stratified k-fold cross validation.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Write the report JSON here as well as to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Held-out score of every example, as `label,score` CSV.
        #[arg(long)]
        scores_out: Option<PathBuf>,
        /// ROC of the held-out scores, as `fpr,tpr,threshold` CSV.
        #[arg(long)]
        roc_out: Option<PathBuf>,
    },
    /// Pick the lowest threshold whose false-positive rate stays under a target.
    Calibrate {
        /// `label,score` CSV, e.g. from `evaluate --scores-out`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        target_fpr: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score texts or a corpus with a trained model.
    Score {
        #[command(flatten)]
        model: LoadModelArgs,
        /// Text to score; repeatable.
        #[arg(long, conflicts_with = "input")]
        text: Vec<String>,
        /// JSONL ads to score.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also report whether each score reaches this threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Flag political ads in the collector corpus and check them against the
    /// declared archive.
    Audit {
        #[command(flatten)]
        model: LoadModelArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        declared: Option<PathBuf>,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[arg(long)]
        language: Option<String>,
        #[command(flatten)]
        period: PeriodArgs,
        /// Keep one ad per normalized caption before scoring.
        #[arg(long)]
        dedup: bool,
        /// Require a four-digit CNPJ branch number.
        #[arg(long)]
        strict_cnpj: bool,
        /// Identifier recorded on flags; defaults to the model file name.
        #[arg(long)]
        model_id: Option<String>,
        /// Append new flags to this review journal.
        #[arg(long)]
        flags_journal: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cohen's kappa between two annotators.
    Kappa {
        /// Label journal written by the service.
        #[arg(long, requires = "annotators", conflicts_with_all = ["a", "b"])]
        journal: Option<PathBuf>,
        /// Two annotator names, comma separated.
        #[arg(long, value_delimiter = ',')]
        annotators: Vec<String>,
        /// Labeled JSONL of the first annotator.
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        /// Labeled JSONL of the second annotator.
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
    },
    /// Growth of repeated archive crawls and probe-based miss estimates.
    Coverage {
        /// JSONL of crawl snapshots `{taken_at, ids}`.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        /// Ids of the base crawl, one per line.
        #[arg(long, requires = "probe")]
        base: Option<PathBuf>,
        /// Ids found by one targeted probe, one per line; repeatable.
        #[arg(long, requires = "base")]
        probe: Vec<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Collector corpus to browse; defaults to corpus.jsonl in the data dir when present.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Declared archive; defaults to declared.jsonl in the data dir when present.
        #[arg(long)]
        declared: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[arg(long)]
        flags_journal: Option<PathBuf>,
        #[arg(long)]
        labels_journal: Option<PathBuf>,
        /// Report JSON from `evaluate`.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Held-out scores CSV from `evaluate --scores-out`.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Override the model's default epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Override the model's default learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LoadModelArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Word vectors for LogReg and CNN models; defaults to embeddings.txt in the data dir.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct ThresholdArgs {
    /// Flag ads scoring at or above this probability.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Calibration JSON written by `calibrate`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeriodArgs {
    /// Keep ads first seen during the 2018 Brazilian electoral period.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    pub electoral_period: bool,
    #[arg(long, requires = "to")]
    pub from: Option<NaiveDate>,
    #[arg(long, requires = "from")]
    pub to: Option<NaiveDate>,
}
