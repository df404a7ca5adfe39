//! `chanliq`: liquidity analysis of payment-channel networks from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 property violation.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "chanliq", version, about = "Liquidity analysis of payment-channel networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Network description (JSON).
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerMethod {
    Exact,
    Hitrun,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form failure probability, lower bound and tightness per pair and size.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// `x:y` pairs separated by commas, or `all` for every unordered pair.
        #[arg(long, default_value = "all")]
        pairs: String,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        /// Also estimate failure from this many exact samples.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Uniform points of the configuration zonotope.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: usize,
        #[arg(long, value_enum, default_value = "exact")]
        method: SamplerMethod,
        /// Hit-and-run burn-in (default 100n).
        #[arg(long)]
        burn_in: Option<usize>,
        /// Hit-and-run thinning (default 10n).
        #[arg(long)]
        thin: Option<usize>,
    },
    /// Runs the random-transaction chain and reports monitored failure rates.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Transaction model (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Overrides the step count in the model file.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        /// Dump recorded states to this CSV file.
        #[arg(long)]
        states: Option<PathBuf>,
    },
    /// Success probability before and after boosting a channel.
    Monotonicity {
        #[command(flatten)]
        common: Common,
        /// Random trials, used when no `--boost` is given.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// `a:b:h`; requires a single `--pairs` and `--k`.
        #[arg(long)]
        boost: Option<String>,
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long)]
        k: Option<f64>,
    },
    /// Zonotope volume by matrix-tree, tree enumeration and basis determinants.
    Volume {
        #[command(flatten)]
        common: Common,
    },
    /// Re-checks membership of sampled points.
    Verify {
        #[command(flatten)]
        common: Common,
        /// CSV written by `sample`.
        #[arg(long)]
        input: PathBuf,
    },
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    Violation(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analyze { common, pairs, k, samples } => commands::analyze(&common, &pairs, &k, samples),
        Command::Sample { common, samples, method, burn_in, thin } => {
            commands::sample(&common, samples, method == SamplerMethod::Exact, burn_in, thin)
        }
        Command::Simulate { common, model, steps, burn_in, thin, states } => {
            commands::simulate(&common, &model, steps, burn_in, thin, states.as_deref())
        }
        Command::Monotonicity { common, trials, boost, pairs, k } => {
            commands::monotonicity(&common, trials, boost.as_deref(), pairs.as_deref(), k)
        }
        Command::Volume { common } => commands::volume(&common),
        Command::Verify { common, input } => commands::verify(&common, &input),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation(msg)) => {
            eprintln!("property violation: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
