//! `cfair`: reproducible counterfactual-fairness pipelines driven by a JSON
//! config file. All state flows through the config; flags override it.

mod commands;
mod config;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use cfair_core::counterfactuals::Strategy;

use config::RunConfig;

/// Usage problems exit 1; data problems exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(cfair_core::Error),
}

impl From<cfair_core::Error> for CliError {
    fn from(e: cfair_core::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Parser)]
#[command(name = "cfair", version, about = "Counterfactual fairness toolkit")]
struct Cli {
    /// JSON run configuration (required).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Random seed; overrides the config's `seed`.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Worker cap for parallel stages; outputs are independent of it.
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,

    /// Regularization coefficient; overrides the config's `train.lambda`.
    #[arg(long, global = true, value_name = "REAL")]
    lambda: Option<f64>,

    /// Counterfactual strategy (ALL|ACL|NEG|SG|RAND|GV); overrides the config.
    #[arg(long, global = true, value_name = "NAME")]
    strategy: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Detect SGT mentions in the corpus.
    Detect,
    /// Train the n-gram language model.
    TrainLm,
    /// Score sentence log-likelihoods.
    Score,
    /// Generate counterfactual sets.
    GenCf,
    /// Rank originals against their substitutions.
    RankReport,
    /// Train the classifier with counterfactual logit pairing.
    Train,
    /// Evaluate a trained model: accuracy, CTF, equality-of-odds spreads.
    Eval,
    /// Train and evaluate one model per regularization coefficient.
    LambdaSweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Detect => "detect",
            Command::TrainLm => "train-lm",
            Command::Score => "score",
            Command::GenCf => "gen-cf",
            Command::RankReport => "rank-report",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::LambdaSweep => "lambda-sweep",
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))?;
    }

    let config_path = cli
        .config
        .ok_or_else(|| CliError::Usage("--config PATH is required".to_string()))?;
    let mut config = RunConfig::load(&config_path)?;
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(lambda) = cli.lambda {
        config.train.lambda = Some(lambda);
    }
    if let Some(name) = &cli.strategy {
        config.strategy = name
            .parse::<Strategy>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    config.validate_paths()?;

    commands::prepare_out_dir(&config, cli.command.name(), cli.jobs)?;
    match cli.command {
        Command::Detect => commands::detect(&config),
        Command::TrainLm => commands::train_lm(&config),
        Command::Score => commands::score(&config),
        Command::GenCf => commands::gen_cf(&config),
        Command::RankReport => commands::rank_report(&config),
        Command::Train => commands::train(&config),
        Command::Eval => commands::eval(&config),
        Command::LambdaSweep => commands::lambda_sweep(&config),
    }
}
