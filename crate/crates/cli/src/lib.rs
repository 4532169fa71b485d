// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment plumbing behind the `discsched` binary.
//!
//! An [`ExperimentConfig`] names one command and its inputs; [`run`] computes
//! the artifact, writes it atomically when an output path is set and returns
//! a one-line summary. Every random draw descends from the config's seed, and
//! parallel work items are gathered in a fixed order, so identical configs
//! give byte-identical files for any thread count.

pub mod adversary;

use std::fmt::Write as _;
use std::io::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use discsched::adversaries::adaptive_ratio;
use discsched::bounds::{bound_curves_csv, emit_bound_curves};
use discsched::io::trace_to_json;
use discsched::oracle::assignment_csv;
use discsched::{
    bound_value, competitive_ratio_point, opt_bruteforce, opt_matching, psi, simulate, solve_equal_ratio_system,
    BoundKind, MinerParams, PolicyDescriptor, PolicySpec,
};

pub use adversary::AdversarySpec;

/// Environment variable capping the worker threads of a sweep.
pub const THREADS_ENV: &str = "DISCSCHED_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input; `field` names the offending option.
    #[error("{field}: {message}")]
    Config { field: String, message: String },
    /// A numeric routine failed on valid input.
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for configuration errors, 3 for numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    /// Sorts a library error into config or numeric, blaming `field`.
    pub fn from_core(field: &str, err: discsched::Error) -> Self {
        use discsched::Error as E;
        match err {
            E::NoSignChange { .. }
            | E::NotConverged { .. }
            | E::NonMonotoneRatios { .. }
            | E::DivisionByZero { .. } => CliError::Numeric(err.to_string()),
            other => CliError::config(field, other.to_string()),
        }
    }
}

fn unit_interval(field: &str, value: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CliError::config(field, format!("{value} is not in [0, 1]")))
    }
}

fn positive(field: &str, value: usize) -> Result<(), CliError> {
    if value == 0 {
        return Err(CliError::config(field, "must be at least 1"));
    }
    Ok(())
}

/// Field-level checks, so errors name the option rather than the routine.
fn validate(experiment: &Experiment) -> Result<(), CliError> {
    match experiment {
        Experiment::Simulate { lambda, gamma, .. }
        | Experiment::Ratio { lambda, gamma, .. }
        | Experiment::Oracle { lambda, gamma, .. } => {
            unit_interval("lambda", *lambda)?;
            unit_interval("gamma", *gamma)
        }
        Experiment::Sweep { lambdas, gamma, .. } => {
            lambdas.iter().try_for_each(|&l| unit_interval("lambdas", l))?;
            unit_interval("gamma", *gamma)
        }
        Experiment::Bounds { grid } => grid.iter().try_for_each(|&l| unit_interval("grid", l)),
        Experiment::SolveUb { lambda, n, tol } => {
            unit_interval("lambda", *lambda)?;
            positive("n", *n)?;
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(CliError::config("tol", format!("{tol} is not a positive number")));
            }
            Ok(())
        }
        Experiment::AdaptiveUb {
            lambda,
            gamma,
            n,
            samples,
            ..
        } => {
            unit_interval("lambda", *lambda)?;
            unit_interval("gamma", *gamma)?;
            positive("n", *n)?;
            positive("samples", *samples)
        }
    }
}

fn core(field: &'static str) -> impl Fn(discsched::Error) -> CliError {
    move |e| CliError::from_core(field, e)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Simulate {
        policy: PolicySpec,
        adversary: AdversarySpec,
        lambda: f64,
        gamma: f64,
        seed: u64,
    },
    Ratio {
        policy: PolicySpec,
        adversary: AdversarySpec,
        lambda: f64,
        gamma: f64,
        samples: usize,
        seed: u64,
    },
    Sweep {
        policy: PolicySpec,
        family: AdversarySpec,
        n_range: RangeInclusive<usize>,
        lambdas: Vec<f64>,
        gamma: f64,
        samples: usize,
        seed: u64,
    },
    Bounds {
        grid: Vec<f64>,
    },
    SolveUb {
        lambda: f64,
        n: usize,
        tol: f64,
    },
    AdaptiveUb {
        policy: PolicySpec,
        lambda: f64,
        gamma: f64,
        n: usize,
        samples: usize,
        seed: u64,
        with_matching: bool,
    },
    Oracle {
        adversary: AdversarySpec,
        lambda: f64,
        gamma: f64,
        check: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Where the artifact goes; `None` leaves it to the caller.
    pub out_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub artifact: String,
    pub summary: String,
}

/// Runs one experiment and writes its artifact if an output path is set.
pub fn run(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    validate(&config.experiment)?;
    let outcome = compute(&config.experiment)?;
    if let Some(path) = &config.out_path {
        write_atomic(path, &outcome.artifact)?;
    }
    Ok(outcome)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// A pool honouring [`THREADS_ENV`]; unset means one thread per core.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| CliError::config(THREADS_ENV, format!("{v:?} is not a positive integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(THREADS_ENV, e.to_string()))
}

/// Quotes a CSV field when it needs it.
fn field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Deterministic policies are evaluated once, whatever was asked.
fn effective_samples(policy: &PolicyDescriptor, samples: usize) -> Result<usize, CliError> {
    if samples == 0 {
        return Err(CliError::config("samples", "must be at least 1"));
    }
    Ok(if policy.is_deterministic() { 1 } else { samples })
}

/// Ratio of `policy` against one adversary: policy over matching optimum
/// for fixed schedules, `E[ALG] / E[ADV]` for the adaptive one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub ci: f64,
    pub mean_revenue: f64,
    pub reference_revenue: f64,
    pub samples: usize,
}

pub fn estimate_ratio(
    policy: &PolicyDescriptor,
    adversary: &AdversarySpec,
    lambda: f64,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<RatioEstimate, CliError> {
    let samples = effective_samples(policy, samples)?;
    if adversary.is_adaptive() {
        let n = adversary.adaptive_n()?;
        let e = adaptive_ratio(policy, n, lambda, gamma, samples, seed, false).map_err(core("lambda"))?;
        return Ok(RatioEstimate {
            ratio: e.ratio,
            ci: e.ci_halfwidth,
            mean_revenue: e.mean_alg,
            reference_revenue: e.mean_adv,
            samples,
        });
    }
    let schedule = adversary.schedule(lambda)?;
    let params = MinerParams::for_schedule(lambda, gamma, &schedule).map_err(core("lambda"))?;
    let p = competitive_ratio_point(policy, &schedule, &params, samples, seed).map_err(core("adversary"))?;
    Ok(RatioEstimate {
        ratio: p.ratio,
        ci: p.ci_halfwidth,
        mean_revenue: p.mean_revenue,
        reference_revenue: p.opt_revenue,
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub n: usize,
    pub ratio: f64,
    pub ci: f64,
}

pub const SWEEP_HEADER: &str = "lambda,n,ratio,ci";

/// Ratio of `policy` against `family` over every `(lambda, n)`, sorted by
/// `(lambda, n)`. Each work item reads its own sample streams of `seed`.
pub fn sweep_ratio(
    policy: PolicySpec,
    family: &AdversarySpec,
    n_range: RangeInclusive<usize>,
    lambda_grid: &[f64],
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, CliError> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(CliError::config("n-range", "needs 1 <= start <= end"));
    }
    if lambda_grid.is_empty() {
        return Err(CliError::config("lambdas", "no discount factors given"));
    }
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let items: Vec<(f64, usize)> = lambdas
        .iter()
        .flat_map(|&l| n_range.clone().map(move |n| (l, n)))
        .collect();
    let eval = |&(lambda, n): &(f64, usize)| -> Result<SweepRow, CliError> {
        let policy = policy.resolve(lambda).map_err(core("policy"))?;
        let e = estimate_ratio(&policy, &family.with_n(n), lambda, gamma, samples, seed)?;
        Ok(SweepRow {
            lambda,
            n,
            ratio: e.ratio,
            ci: e.ci,
        })
    };
    thread_pool()?.install(|| items.par_iter().map(eval).collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.lambda, r.n, r.ratio, r.ci).unwrap();
    }
    out
}

/// JSON report of `solve-ub`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub lambda: f64,
    pub n: usize,
    pub tol: f64,
    pub x1: f64,
    pub v: f64,
    pub inv_psi: f64,
    /// `v - 1/psi(lambda)`.
    pub gap: f64,
    pub residual: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
}

pub const RATIO_HEADER: &str = "policy,adversary,lambda,gamma,samples,seed,ratio,ci,mean_revenue,reference_revenue";
pub const ADAPTIVE_HEADER: &str =
    "policy,lambda,gamma,n,samples,seed,mean_alg,mean_adv,ratio,ci,ratio_vs_opt,rand_upper";

fn compute(experiment: &Experiment) -> Result<Outcome, CliError> {
    match experiment {
        Experiment::Simulate {
            policy,
            adversary,
            lambda,
            gamma,
            seed,
        } => {
            let policy = policy.resolve(*lambda).map_err(core("policy"))?;
            let schedule = adversary.schedule(*lambda)?;
            let params = MinerParams::for_schedule(*lambda, *gamma, &schedule).map_err(core("lambda"))?;
            let trace = simulate(&policy, &schedule, &params, *seed).map_err(core("adversary"))?;
            Ok(Outcome {
                summary: format!(
                    "simulate: {policy} on {} earned {} (lambda {lambda}, gamma {gamma}, seed {seed})",
                    schedule.label(),
                    trace.revenue
                ),
                artifact: trace_to_json(&trace),
            })
        }
        Experiment::Ratio {
            policy,
            adversary,
            lambda,
            gamma,
            samples,
            seed,
        } => {
            let policy = policy.resolve(*lambda).map_err(core("policy"))?;
            let e = estimate_ratio(&policy, adversary, *lambda, *gamma, *samples, *seed)?;
            let mut artifact = format!("{RATIO_HEADER}\n");
            writeln!(
                artifact,
                "{},{},{lambda},{gamma},{},{seed},{},{},{},{}",
                field(&policy.to_string()),
                field(&adversary.to_string()),
                e.samples,
                e.ratio,
                e.ci,
                e.mean_revenue,
                e.reference_revenue
            )
            .unwrap();
            Ok(Outcome {
                summary: format!(
                    "ratio: {policy} vs {adversary} = {} +- {} ({} samples, seed {seed})",
                    e.ratio, e.ci, e.samples
                ),
                artifact,
            })
        }
        Experiment::Sweep {
            policy,
            family,
            n_range,
            lambdas,
            gamma,
            samples,
            seed,
        } => {
            let rows = sweep_ratio(*policy, family, n_range.clone(), lambdas, *gamma, *samples, *seed)?;
            let last = rows.last().expect("non-empty sweep");
            Ok(Outcome {
                summary: format!(
                    "sweep: {} rows vs {family}, last ratio {} at lambda {} n {} (seed {seed})",
                    rows.len(),
                    last.ratio,
                    last.lambda,
                    last.n
                ),
                artifact: sweep_csv(&rows),
            })
        }
        Experiment::Bounds { grid } => {
            let rows = emit_bound_curves(grid).map_err(core("grid"))?;
            Ok(Outcome {
                summary: format!("bounds: {} rows", rows.len()),
                artifact: bound_curves_csv(&rows),
            })
        }
        Experiment::SolveUb { lambda, n, tol } => {
            let s = solve_equal_ratio_system(*n, *lambda, *tol).map_err(core("lambda"))?;
            let inv_psi = 1.0 / psi(*lambda);
            let report = SolverReport {
                lambda: *lambda,
                n: *n,
                tol: *tol,
                x1: s.x[1],
                v: s.v,
                inv_psi,
                gap: s.v - inv_psi,
                residual: s.residual,
                x: s.x,
                r: s.r,
            };
            let mut artifact = serde_json::to_string_pretty(&report).expect("plain data");
            artifact.push('\n');
            Ok(Outcome {
                summary: format!(
                    "solve-ub: lambda {lambda} n {n}: V = {} (1/psi = {inv_psi}, residual {:e})",
                    report.v, report.residual
                ),
                artifact,
            })
        }
        Experiment::AdaptiveUb {
            policy,
            lambda,
            gamma,
            n,
            samples,
            seed,
            with_matching,
        } => {
            let policy = policy.resolve(*lambda).map_err(core("policy"))?;
            let samples = effective_samples(&policy, *samples)?;
            let e =
                adaptive_ratio(&policy, *n, *lambda, *gamma, samples, *seed, *with_matching).map_err(core("lambda"))?;
            let bound = bound_value(BoundKind::RandUpper, *lambda);
            let vs_opt = e.ratio_vs_opt.map(|v| v.to_string()).unwrap_or_default();
            let mut artifact = format!("{ADAPTIVE_HEADER}\n");
            writeln!(
                artifact,
                "{},{lambda},{gamma},{n},{samples},{seed},{},{},{},{},{vs_opt},{bound}",
                field(&policy.to_string()),
                e.mean_alg,
                e.mean_adv,
                e.ratio,
                e.ci_halfwidth
            )
            .unwrap();
            Ok(Outcome {
                summary: format!(
                    "adaptive-ub: {policy} E[ALG]/E[ADV] = {} +- {} against 1 - lambda/4 = {bound} ({samples} runs, seed {seed})",
                    e.ratio, e.ci_halfwidth
                ),
                artifact,
            })
        }
        Experiment::Oracle {
            adversary,
            lambda,
            gamma,
            check,
        } => {
            let schedule = adversary.schedule(*lambda)?;
            let params = MinerParams::for_schedule(*lambda, *gamma, &schedule).map_err(core("lambda"))?;
            let solution = opt_matching(&schedule, &params);
            let mut summary = format!(
                "oracle: {} optimum {} with {} allocations",
                schedule.label(),
                solution.revenue,
                solution.assignment.len()
            );
            if *check {
                let exhaustive = opt_bruteforce(&schedule, &params).map_err(core("adversary"))?;
                let diff = (exhaustive - solution.revenue).abs();
                if diff > 1e-9 * exhaustive.abs().max(1.0) {
                    return Err(CliError::Numeric(format!(
                        "matching optimum {} differs from exhaustive {exhaustive}",
                        solution.revenue
                    )));
                }
                write!(summary, ", exhaustive search agrees").unwrap();
            }
            Ok(Outcome {
                summary,
                artifact: assignment_csv(&solution),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(field("plain"), "plain");
        assert_eq!(field("a,b"), "\"a,b\"");
        assert_eq!(field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn numeric_and_config_errors_map_to_distinct_codes() {
        let numeric = CliError::from_core(
            "lambda",
            discsched::Error::NoSignChange {
                lo: 1.0,
                hi: 2.0,
                f_lo: 1.0,
                f_hi: 1.0,
            },
        );
        assert_eq!(numeric.exit_code(), 3);
        let config = CliError::from_core("lambda", discsched::Error::InvalidParams("bad".into()));
        assert_eq!(config.exit_code(), 2);
        assert!(config.to_string().starts_with("lambda:"));
    }

    #[test]
    fn deterministic_policies_take_one_sample() {
        assert_eq!(effective_samples(&PolicyDescriptor::Greedy, 500).unwrap(), 1);
        assert_eq!(
            effective_samples(&PolicyDescriptor::Rmix { lambda: 0.5 }, 500).unwrap(),
            500
        );
        assert!(effective_samples(&PolicyDescriptor::Greedy, 0).is_err());
    }
}
