use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use incad::config::Config;
use incad::error::{Error, Result};
use incad::harness;

#[derive(Parser)]
#[command(
    name = "incad",
    about = "Simultaneous nonparametric clustering and anomaly detection on batch or streaming data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run batch inference over a whole dataset.
    Batch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Batch-initialize on a prefix, then stream the remaining points.
    Stream {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "batch-fraction")]
        batch_fraction: Option<f64>,
    },
    /// Sweep the batch fraction and tabulate metrics per fraction.
    Sensitivity {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated batch fractions (default 0.1..0.9).
        #[arg(long)]
        fractions: Option<String>,
    },
    /// Generate the labeled synthetic benchmark dataset.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score an existing results file against a labeled dataset.
    Eval {
        /// Labeled dataset CSV.
        #[arg(long)]
        input: PathBuf,
        /// results.jsonl produced by batch or stream.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>, seed: Option<u64>) -> Result<Config> {
    let mut cfg = match path {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn parse_fractions(raw: &Option<String>) -> Result<Vec<f64>> {
    match raw {
        None => Ok((1..=9).map(|k| k as f64 / 10.0).collect()),
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad fraction '{s}'")))
            })
            .collect(),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Batch {
            input,
            out,
            config,
            seed,
        } => {
            let cfg = load_config(&config, seed)?;
            harness::run_batch(&cfg, &input, &out)?;
        }
        Command::Stream {
            input,
            out,
            config,
            seed,
            batch_fraction,
        } => {
            let mut cfg = load_config(&config, seed)?;
            if let Some(f) = batch_fraction {
                cfg.stream.batch_fraction = f;
            }
            harness::run_stream(&cfg, &input, &out)?;
        }
        Command::Sensitivity {
            input,
            out,
            config,
            seed,
            fractions,
        } => {
            let cfg = load_config(&config, seed)?;
            let fractions = parse_fractions(&fractions)?;
            harness::run_sensitivity(&cfg, &input, &out, &fractions)?;
        }
        Command::Simulate { out, config, seed } => {
            let cfg = load_config(&config, seed)?;
            harness::run_simulate(&cfg, &out)?;
        }
        Command::Eval {
            input,
            results,
            out,
            config,
        } => {
            let cfg = load_config(&config, None)?;
            harness::run_eval(&input, &results, &out, &cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
