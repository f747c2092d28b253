//! `faht` command-line experiments: single-learner runs, criterion
//! comparisons and window-ensemble runs over a shuffled dataset stream.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faht::{KamiranVariant, LearnerConfig, NullSplitMode, SplitCriterion};

#[derive(Parser, Debug)]
#[command(
    name = "faht",
    version,
    about = "Fairness-aware Hoeffding tree experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prequential run of one learner.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "faht")]
        criterion: CriterionArg,
    },
    /// Paired prequential runs of two criteria over the same stream.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Give twice: baseline first, then the contender.
        #[arg(long, value_enum, num_args = 1, default_values = ["ht", "faht"])]
        criterion: Vec<CriterionArg>,
    },
    /// Window ensembles built from HT and FAHT members.
    Ensemble {
        #[command(flatten)]
        common: CommonArgs,
        /// Instances per tumbling window; `inf` for one unending window.
        #[arg(long, default_value = "1000", value_parser = parse_window)]
        window: usize,
        /// Maximum number of ensemble members.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        capacity: u32,
    },
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Dataset config file.
    #[arg(long)]
    data: PathBuf,
    /// Shuffle seed. Without `--seed` or `--seeds` the config's seed (or
    /// file order) is used.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated shuffle seeds, run in parallel.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = faht::eval::DEFAULT_SNAPSHOT_EVERY, value_parser = parse_positive)]
    snapshot_every: usize,
    #[command(flatten)]
    learner: LearnerArgs,
}

#[derive(Args, Debug, Clone)]
struct LearnerArgs {
    #[arg(long, value_enum, default_value = "subtract")]
    kamiran_variant: KamiranArg,
    #[arg(long, default_value_t = LearnerConfig::default().grace_period)]
    grace_period: u32,
    #[arg(long, default_value_t = LearnerConfig::default().delta)]
    delta: f64,
    /// Tie threshold.
    #[arg(long, default_value_t = LearnerConfig::default().tie_threshold)]
    tau: f64,
    #[arg(long, value_enum, default_value = "zero")]
    null_split_mode: NullModeArg,
    #[arg(long, default_value_t = LearnerConfig::default().numeric_bins)]
    numeric_bins: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum CriterionArg {
    Ht,
    Faht,
    Kamiran,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KamiranArg {
    Subtract,
    Divide,
    Add,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum NullModeArg {
    Zero,
    EntropyTimesDisc,
}

fn parse_window(s: &str) -> Result<usize, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(usize::MAX);
    }
    parse_positive(s)
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

impl LearnerArgs {
    fn config(&self, criterion: CriterionArg) -> LearnerConfig {
        let variant = match self.kamiran_variant {
            KamiranArg::Subtract => KamiranVariant::Subtract,
            KamiranArg::Divide => KamiranVariant::Divide,
            KamiranArg::Add => KamiranVariant::Add,
        };
        LearnerConfig {
            split_criterion: match criterion {
                CriterionArg::Ht => SplitCriterion::InfoGain,
                CriterionArg::Faht => SplitCriterion::FairInfoGain,
                CriterionArg::Kamiran => SplitCriterion::Kamiran(variant),
            },
            grace_period: self.grace_period,
            delta: self.delta,
            tie_threshold: self.tau,
            null_split_mode: match self.null_split_mode {
                NullModeArg::Zero => NullSplitMode::Zero,
                NullModeArg::EntropyTimesDisc => NullSplitMode::EntropyTimesDisc,
            },
            numeric_bins: self.numeric_bins,
            ..LearnerConfig::default()
        }
    }
}

/// Failure category, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or dataset: exit 2.
    Usage(String),
    /// Anything that goes wrong once the experiment is running: exit 1.
    Runtime(String),
}

impl From<faht::Error> for Failure {
    fn from(e: faht::Error) -> Self {
        use faht::Error as E;
        match e {
            E::Io { .. } | E::Parse { .. } | E::SchemaViolation(_) | E::Config(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { common, criterion } => commands::run(&common, criterion),
        Command::Compare { common, criterion } => commands::compare(&common, &criterion),
        Command::Ensemble {
            common,
            window,
            capacity,
        } => commands::ensemble(&common, window, capacity as usize),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
