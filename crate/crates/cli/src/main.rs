//! `expool`: partition task corpora, launch experience-propagation runs,
//! prune saved pools, and regenerate reports.
//!
//! Exit codes: 0 success, 2 input error, 3 resumable runtime failure
//! (checkpoints preserved), 4 configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expool_core::error::Error;
use expool_core::propagation::Pattern;

use crate::config::{FileConfig, RunOverrides};

#[derive(Parser)]
#[command(name = "expool", version, about = "Experience-pool propagation runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a task corpus into stratified batches and write the manifest.
    Ingest {
        /// Task corpus (JSON Lines: task_id, category, task_text).
        #[arg(long)]
        corpus: PathBuf,
        /// Number of batches.
        #[arg(long, default_value_t = 6)]
        batches: u32,
        /// Shuffle seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for the manifest.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Execute a pattern run end to end with per-batch checkpoints.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Task corpus path (overrides the config file).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Propagation pattern.
        #[arg(long, value_parser = parse_pattern)]
        pattern: Option<Pattern>,
        /// Number of batches.
        #[arg(long)]
        batches: Option<u32>,
        /// Master seed for partitioning and embedding.
        #[arg(long)]
        seed: Option<u64>,
        /// Information-gain threshold ε.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Frequency fractile threshold θ.
        #[arg(long)]
        theta: Option<f64>,
        /// Retrieved few-shot examples per query.
        #[arg(long)]
        k: Option<usize>,
        /// Agent backend: scripted or remote.
        #[arg(long)]
        backend: Option<String>,
        /// Fixture table for the scripted backend.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue an interrupted run from its checkpoints.
        #[arg(long)]
        resume: bool,
    },
    /// Filter a saved pool by information gain and usage frequency.
    Eliminate {
        /// Pool file to filter.
        #[arg(long)]
        pool: PathBuf,
        /// Information-gain threshold ε.
        #[arg(long, default_value_t = 0.95)]
        epsilon: f64,
        /// Frequency fractile threshold θ.
        #[arg(long, default_value_t = 0.95)]
        theta: f64,
        /// Frequency snapshot (JSON Lines: id, freq). Without it, filtering
        /// is gain-only.
        #[arg(long)]
        freq: Option<PathBuf>,
        /// Output pool file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine a saved chain log into a pool file (offline backends).
    Acquire {
        /// Chain log produced by a run (chains.jsonl).
        #[arg(long)]
        chains: PathBuf,
        /// Output pool file.
        #[arg(long)]
        out: PathBuf,
        /// Origin batch ordinal recorded on the mined records.
        #[arg(long, default_value_t = 1)]
        batch: u32,
        /// Optional fixture table supplying canned pseudo-instructions.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Embedding dimension.
        #[arg(long, default_value_t = 256)]
        dimension: usize,
        /// Embedder seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compute information gains (compile checks included).
        #[arg(long)]
        score: bool,
    },
    /// Print a summary of a saved pool.
    Inspect {
        /// Pool file.
        #[arg(long)]
        pool: PathBuf,
    },
    /// Regenerate report files from a run directory.
    Report {
        /// Run directory (out/runs/<run-id>).
        #[arg(long)]
        run: PathBuf,
    },
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest {
            corpus,
            batches,
            seed,
            out,
        } => commands::cmd_ingest(&corpus, batches, seed, &out),
        Command::Run {
            config,
            corpus,
            pattern,
            batches,
            seed,
            epsilon,
            theta,
            k,
            backend,
            fixtures,
            out,
            resume,
        } => {
            let file = match config {
                Some(path) => FileConfig::load(&path)?,
                None => FileConfig::default(),
            };
            let overrides = RunOverrides {
                corpus,
                pattern,
                batches,
                seed,
                epsilon,
                theta,
                k,
                backend,
                fixtures,
                out,
            };
            let resolved = config::resolve(&file, &overrides)?;
            commands::cmd_run(&resolved, resume)
        }
        Command::Eliminate {
            pool,
            epsilon,
            theta,
            freq,
            out,
        } => commands::cmd_eliminate(&pool, epsilon, theta, freq.as_deref(), &out),
        Command::Acquire {
            chains,
            out,
            batch,
            fixtures,
            dimension,
            seed,
            score,
        } => commands::cmd_acquire(
            &chains,
            &out,
            batch,
            fixtures.as_deref(),
            dimension,
            seed,
            score,
        ),
        Command::Inspect { pool } => commands::cmd_inspect(&pool),
        Command::Report { run } => commands::cmd_report(&run),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::UndefinedMetric(_)
        | Error::UndefinedRatio(_)
        | Error::Io(_) => 2,
        Error::Backend { .. } | Error::Fixture(_) => 3,
        Error::Config(_) => 4,
        Error::Sequencing(_) | Error::InvalidState(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
