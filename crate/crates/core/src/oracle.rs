// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Offline optimum.
//!
//! With one transaction per block and slot weights that factor as
//! `weight(slot) * fee`, the clairvoyant optimum is a maximum-weight matching
//! between transactions and the slots inside their validity windows.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{horizon_of, MinerParams, Transaction, TransactionSchedule};
use crate::policies::PolicyDescriptor;
use crate::rng::stream_rng;
use crate::sim::simulate_with;

/// Two-sided normal quantile for 99% coverage.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentProblem {
    /// `(arrival step, transaction)` in schedule arrival order.
    pub transactions: Vec<(usize, Transaction)>,
    pub n_slots: usize,
    /// `(tx index, slot, weight)` for every slot in a validity window.
    pub edges: Vec<(usize, usize, f64)>,
}

impl AssignmentProblem {
    pub fn build(schedule: &TransactionSchedule, params: &MinerParams) -> Self {
        let transactions: Vec<_> = schedule.arrivals().collect();
        let last = horizon_of(schedule).min(params.horizon());
        let n_slots = if transactions.is_empty() { 0 } else { last + 1 };
        let mut edges = Vec::new();
        for (i, &(arrival, tx)) in transactions.iter().enumerate() {
            let end = (arrival + tx.ttl() as usize - 1).min(last);
            for slot in arrival..=end {
                edges.push((i, slot, params.weight(slot) * tx.fee()));
            }
        }
        AssignmentProblem {
            transactions,
            n_slots,
            edges,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.transactions.len()
    }

    fn dense(&self) -> Vec<Vec<Option<f64>>> {
        let mut w = vec![vec![None; self.n_slots]; self.n_tx()];
        for &(i, slot, weight) in &self.edges {
            w[i][slot] = Some(weight);
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Assigned {
    /// Position in `schedule.arrivals()`.
    pub tx: usize,
    pub arrival: usize,
    pub transaction: Transaction,
    pub slot: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptSolution {
    pub revenue: f64,
    /// Sorted by slot.
    pub assignment: Vec<Assigned>,
}

impl OptSolution {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.assignment.iter().map(|a| (a.tx, a.slot)).collect()
    }
}

/// Minimum-cost assignment of every row of `cost` to a distinct column,
/// `rows <= cols`. Returns the column of each row.
fn hungarian(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let rows = cost.len();
    debug_assert!(rows <= cols);
    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![0.0f64; cols + 1];
    let mut used = vec![false; cols + 1];
    for row in 1..=rows {
        owner[0] = row;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let row_cost = &cost[i0 - 1];
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = row_cost[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    col_of
}

/// Maximum-weight matching on the validity-window graph.
pub fn opt_matching(schedule: &TransactionSchedule, params: &MinerParams) -> OptSolution {
    let problem = AssignmentProblem::build(schedule, params);
    solve(&problem)
}

pub fn solve(problem: &AssignmentProblem) -> OptSolution {
    let (n_tx, n_slots) = (problem.n_tx(), problem.n_slots);
    if n_tx == 0 || n_slots == 0 {
        return OptSolution {
            revenue: 0.0,
            assignment: Vec::new(),
        };
    }
    let w = problem.dense();
    // Absent edges cost 0, the same as leaving the slot empty.
    let cost_of = |i: usize, s: usize| -w[i][s].unwrap_or(0.0);
    let mut pairs: Vec<(usize, usize)> = if n_tx <= n_slots {
        let cost: Vec<Vec<f64>> = (0..n_tx)
            .map(|i| (0..n_slots).map(|s| cost_of(i, s)).collect())
            .collect();
        hungarian(&cost, n_slots).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..n_slots)
            .map(|s| (0..n_tx).map(|i| cost_of(i, s)).collect())
            .collect();
        hungarian(&cost, n_tx)
            .into_iter()
            .enumerate()
            .map(|(s, i)| (i, s))
            .collect()
    };
    pairs.retain(|&(i, s)| w[i][s].is_some());
    pairs.sort_by_key(|&(_, s)| s);
    let assignment: Vec<Assigned> = pairs
        .into_iter()
        .map(|(i, slot)| {
            let (arrival, transaction) = problem.transactions[i];
            Assigned {
                tx: i,
                arrival,
                transaction,
                slot,
                weight: w[i][slot].expect("retained"),
            }
        })
        .collect();
    let revenue = assignment.iter().map(|a| a.weight).sum();
    OptSolution { revenue, assignment }
}

pub const ASSIGNMENT_HEADER: &str = "tx_arrival,tx_ttl,tx_fee,slot,weight";

pub fn assignment_csv(solution: &OptSolution) -> String {
    let mut out = String::from(ASSIGNMENT_HEADER);
    out.push('\n');
    for a in &solution.assignment {
        writeln!(
            out,
            "{},{},{},{},{}",
            a.arrival,
            a.transaction.ttl(),
            a.transaction.fee(),
            a.slot,
            a.weight
        )
        .unwrap();
    }
    out
}

pub const BRUTEFORCE_MAX_TX: usize = 10;
pub const BRUTEFORCE_MAX_HORIZON: usize = 10;

/// Exhaustive optimum over every partial assignment, for tiny instances.
///
/// Walks the slots in order, either leaving each one empty or filling it with
/// any unused transaction that is valid there, memoized on the used set.
pub fn opt_bruteforce(schedule: &TransactionSchedule, params: &MinerParams) -> Result<f64> {
    let txs: Vec<(usize, Transaction)> = schedule.arrivals().collect();
    let last = horizon_of(schedule).min(params.horizon());
    if txs.len() > BRUTEFORCE_MAX_TX || last > BRUTEFORCE_MAX_HORIZON {
        return Err(Error::InstanceTooLarge {
            transactions: txs.len(),
            horizon: last,
        });
    }
    if txs.is_empty() {
        return Ok(0.0);
    }
    let full = 1usize << txs.len();
    let slots = last + 1;
    // best[slot][used] = optimum over slots >= slot given the used set.
    let mut best = vec![vec![0.0f64; full]; slots + 1];
    for slot in (0..slots).rev() {
        let weight = params.weight(slot);
        for used in 0..full {
            let mut value = best[slot + 1][used];
            for (i, &(arrival, tx)) in txs.iter().enumerate() {
                let valid = arrival <= slot && slot < arrival + tx.ttl() as usize;
                if valid && used & (1 << i) == 0 {
                    value = value.max(weight * tx.fee() + best[slot + 1][used | (1 << i)]);
                }
            }
            best[slot][used] = value;
        }
    }
    Ok(best[0][0])
}

/// Mean policy revenue against one schedule, relative to the optimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioPoint {
    pub ratio: f64,
    /// 99% normal half-width of `ratio`; 0 for deterministic policies.
    pub ci_halfwidth: f64,
    pub mean_revenue: f64,
    pub revenue_sd: f64,
    pub opt_revenue: f64,
    pub samples: usize,
}

/// Sample `k` uses stream `k` of `seed`.
pub fn competitive_ratio_point(
    policy: &PolicyDescriptor,
    schedule: &TransactionSchedule,
    params: &MinerParams,
    n_samples: usize,
    seed: u64,
) -> Result<RatioPoint> {
    if n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be at least 1".into()));
    }
    if policy.is_deterministic() && n_samples != 1 {
        return Err(Error::InvalidParams(format!(
            "deterministic policy {policy} takes exactly one sample, got {n_samples}"
        )));
    }
    let opt = opt_matching(schedule, params).revenue;
    let mut revenues = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let mut rng = stream_rng(seed, k as u64);
        revenues.push(simulate_with(policy, schedule, params, seed, &mut rng)?.revenue);
    }
    let (mean, sd) = mean_sd(&revenues);
    ratio_from(mean, sd, opt, n_samples)
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub(crate) fn ratio_from(mean: f64, sd: f64, opt: f64, samples: usize) -> Result<RatioPoint> {
    let (ratio, ci) = if opt == 0.0 {
        if mean > 0.0 {
            return Err(Error::DivisionByZero { policy_revenue: mean });
        }
        (1.0, 0.0)
    } else {
        (mean / opt, Z_99 * sd / (samples as f64).sqrt() / opt)
    };
    Ok(RatioPoint {
        ratio,
        ci_halfwidth: ci,
        mean_revenue: mean,
        revenue_sd: sd,
        opt_revenue: opt,
        samples,
    })
}
