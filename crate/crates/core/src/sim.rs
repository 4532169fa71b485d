// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! The simulation loop and discounted revenue.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{transition, MempoolState, MinerParams, Transaction, TransactionSchedule};
use crate::policies::Policy;
use crate::rng::stream_rng;

/// Record of one run of a policy against a fixed schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationTrace {
    pub schedule_label: String,
    pub lambda: f64,
    pub gamma: f64,
    pub seed: u64,
    /// One entry per step `0..=horizon`, with TTLs as presented at that step.
    pub choices: Vec<(usize, Option<Transaction>)>,
    /// Position in `schedule.arrivals()` of each chosen transaction.
    pub origins: Vec<Option<usize>>,
    /// Probability the policy put on a TTL=1 pick at each step.
    pub urgent_probabilities: Vec<f64>,
    /// Mempool size carried into each step, before emissions.
    pub mempool_sizes: Vec<usize>,
    pub revenue: f64,
}

impl SimulationTrace {
    /// The chosen `(step, transaction)` pairs, skipping idle steps.
    pub fn allocations(&self) -> Vec<(usize, Transaction)> {
        self.choices
            .iter()
            .filter_map(|&(step, tx)| tx.map(|tx| (step, tx)))
            .collect()
    }

    /// `(arrival index, slot)` pairs, comparable with an oracle assignment.
    pub fn assignment(&self) -> Vec<(usize, usize)> {
        self.choices
            .iter()
            .zip(&self.origins)
            .filter_map(|(&(step, _), origin)| origin.map(|id| (id, step)))
            .collect()
    }
}

/// `sum weight(step) * fee` over the given allocations.
pub fn discounted_revenue(choices: &[(usize, Transaction)], params: &MinerParams) -> f64 {
    choices.iter().map(|&(step, tx)| params.weight(step) * tx.fee()).sum()
}

/// Runs `policy` on `schedule` for steps `0..=params.horizon()`.
///
/// Randomized policies read stream 0 of `seed`.
pub fn simulate(
    policy: &dyn Policy,
    schedule: &TransactionSchedule,
    params: &MinerParams,
    seed: u64,
) -> Result<SimulationTrace> {
    simulate_with(policy, schedule, params, seed, &mut stream_rng(seed, 0))
}

/// [`simulate`] with an explicit random source. `seed` is only recorded.
pub fn simulate_with(
    policy: &dyn Policy,
    schedule: &TransactionSchedule,
    params: &MinerParams,
    seed: u64,
    rng: &mut dyn RngCore,
) -> Result<SimulationTrace> {
    if let Some(last) = schedule.last_step() {
        if last > params.horizon() {
            return Err(Error::ScheduleBeyondHorizon {
                step: last,
                horizon: params.horizon(),
            });
        }
    }
    let steps = params.horizon() + 1;
    let mut trace = SimulationTrace {
        schedule_label: schedule.label().to_string(),
        lambda: params.lambda(),
        gamma: params.gamma(),
        seed,
        choices: Vec::with_capacity(steps),
        origins: Vec::with_capacity(steps),
        urgent_probabilities: Vec::with_capacity(steps),
        mempool_sizes: Vec::with_capacity(steps),
        revenue: 0.0,
    };

    let mut pool: Vec<(usize, Transaction)> = Vec::new();
    let mut next_id = 0usize;
    for step in 0..steps {
        trace.mempool_sizes.push(pool.len());
        for &tx in schedule.at(step) {
            pool.push((next_id, tx));
            next_id += 1;
        }
        let available: Vec<Transaction> = pool.iter().map(|&(_, tx)| tx).collect();
        let choice = policy.choose(&available, rng);
        let index = match choice.index {
            Some(i) if i < available.len() && choice.chosen == Some(available[i]) => Some(i),
            None if available.is_empty() => None,
            _ => return Err(Error::PolicyChoseUnavailable { step }),
        };
        trace.choices.push((step, index.map(|i| available[i])));
        trace.origins.push(index.map(|i| pool[i].0));
        trace.urgent_probabilities.push(choice.urgent_probability);
        transition(&mut pool, index);
    }
    trace.revenue = discounted_revenue(&trace.allocations(), params);
    Ok(trace)
}

/// Mempool snapshot after replaying the first `steps` steps of a trace.
pub fn replay_mempool(schedule: &TransactionSchedule, trace: &SimulationTrace, steps: usize) -> Result<MempoolState> {
    let mut pool = MempoolState::empty();
    for &(step, chosen) in trace.choices.iter().take(steps) {
        pool = pool.step(schedule.at(step), chosen.as_ref())?;
    }
    Ok(pool)
}
