// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use discsched::bounds::parse_grid;
use discsched::PolicySpec;
use discsched_cli::{run, AdversarySpec, CliError, Experiment, ExperimentConfig};

/// Discounted transaction scheduling experiments.
#[derive(Parser)]
#[command(name = "discsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Discount factor in [0, 1].
    #[arg(long)]
    lambda: f64,
    /// Present-bias factor in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Artifact path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a policy on one adversary schedule and emit the trace JSON.
    Simulate {
        #[arg(long)]
        policy: String,
        #[arg(long)]
        adversary: String,
        /// Family size when the adversary string leaves it out.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio of a policy to the offline optimum on one adversary.
    Ratio {
        #[arg(long)]
        policy: String,
        #[arg(long)]
        adversary: String,
        #[arg(long)]
        n: Option<usize>,
        /// Monte Carlo samples for randomized policies.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio over a grid of discount factors and family sizes.
    Sweep {
        #[arg(long)]
        policy: String,
        #[arg(long)]
        family: String,
        /// Family sizes as `a:b` (inclusive).
        #[arg(long, default_value = "1:1")]
        n_range: String,
        /// Comma-separated discount factors.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound curves as CSV.
    Bounds {
        /// Grid `a:b:step`.
        #[arg(long, default_value = "0:1:0.01")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the equal-ratio system behind the deterministic upper bound.
    SolveUb {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate E[ALG]/E[ADV] against the adaptive adversary.
    AdaptiveUb {
        #[arg(long, default_value = "rmix")]
        policy: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also average the matching optimum of each realized schedule.
        #[arg(long)]
        with_matching: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Optimal offline assignment as CSV.
    Oracle {
        #[arg(long)]
        adversary: String,
        #[arg(long)]
        n: Option<usize>,
        /// Cross-check against exhaustive search (small instances only).
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn policy(text: &str) -> Result<PolicySpec, CliError> {
    text.parse()
        .map_err(|e: discsched::Error| CliError::config("policy", e.to_string()))
}

fn adversary(text: &str, n: Option<usize>) -> Result<AdversarySpec, CliError> {
    Ok(text.parse::<AdversarySpec>()?.or_n(n))
}

fn n_range(text: &str) -> Result<std::ops::RangeInclusive<usize>, CliError> {
    let bad = || CliError::config("n-range", format!("{text:?} is not a:b"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    Ok(a..=b)
}

fn config(command: Command) -> Result<ExperimentConfig, CliError> {
    let (experiment, out_path) = match command {
        Command::Simulate {
            policy: p,
            adversary: a,
            n,
            seed,
            common,
        } => (
            Experiment::Simulate {
                policy: policy(&p)?,
                adversary: adversary(&a, n)?,
                lambda: common.lambda,
                gamma: common.gamma,
                seed,
            },
            common.out,
        ),
        Command::Ratio {
            policy: p,
            adversary: a,
            n,
            samples,
            seed,
            common,
        } => (
            Experiment::Ratio {
                policy: policy(&p)?,
                adversary: adversary(&a, n)?,
                lambda: common.lambda,
                gamma: common.gamma,
                samples,
                seed,
            },
            common.out,
        ),
        Command::Sweep {
            policy: p,
            family,
            n_range: range,
            lambdas,
            gamma,
            samples,
            seed,
            out,
        } => (
            Experiment::Sweep {
                policy: policy(&p)?,
                family: family.parse()?,
                n_range: n_range(&range)?,
                lambdas,
                gamma,
                samples,
                seed,
            },
            out,
        ),
        Command::Bounds { grid, out } => (
            Experiment::Bounds {
                grid: parse_grid(&grid).map_err(|e| CliError::config("grid", e.to_string()))?,
            },
            out,
        ),
        Command::SolveUb { lambda, n, tol, out } => (Experiment::SolveUb { lambda, n, tol }, out),
        Command::AdaptiveUb {
            policy: p,
            n,
            samples,
            seed,
            with_matching,
            common,
        } => (
            Experiment::AdaptiveUb {
                policy: policy(&p)?,
                lambda: common.lambda,
                gamma: common.gamma,
                n,
                samples,
                seed,
                with_matching,
            },
            common.out,
        ),
        Command::Oracle {
            adversary: a,
            n,
            check,
            common,
        } => (
            Experiment::Oracle {
                adversary: adversary(&a, n)?,
                lambda: common.lambda,
                gamma: common.gamma,
                check,
            },
            common.out,
        ),
    };
    Ok(ExperimentConfig { experiment, out_path })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(cli.command).and_then(|cfg| run(&cfg).map(|outcome| (cfg, outcome)));
    match result {
        Ok((cfg, outcome)) => {
            if cfg.out_path.is_none() {
                print!("{}", outcome.artifact);
            }
            eprintln!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
