// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Transactions, miner parameters, schedules and the mempool transition.
//!
//! Time is counted in steps starting at 0. Each step produces one single-slot
//! block. A transaction with TTL `t` that is present at step `j` can be
//! allocated at any of the steps `j..=j + t - 1`; after every step its TTL
//! shrinks by one and it is dropped once the TTL would reach zero.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A `(ttl, fee)` pair, the atomic schedulable unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transaction {
    ttl: u32,
    fee: f64,
}

impl Transaction {
    pub fn new(ttl: u32, fee: f64) -> Result<Self> {
        if ttl == 0 {
            return Err(Error::InvalidTransaction("ttl must be at least 1".into()));
        }
        if !fee.is_finite() || fee < 0.0 {
            return Err(Error::InvalidTransaction(format!(
                "fee must be finite and non-negative, got {fee}"
            )));
        }
        Ok(Transaction { ttl, fee })
    }

    /// A transaction that never expires within `horizon` steps.
    ///
    /// Infinite TTLs are clamped to `horizon + 1`, which is indistinguishable
    /// from infinity inside a run of `horizon + 1` steps.
    pub fn unbounded(fee: f64, horizon: usize) -> Result<Self> {
        let ttl = u32::try_from(horizon + 1)
            .map_err(|_| Error::InvalidTransaction(format!("horizon {horizon} too large")))?;
        Transaction::new(ttl, fee)
    }

    #[inline]
    pub fn ttl(&self) -> u32 {
        self.ttl
    }

    #[inline]
    pub fn fee(&self) -> f64 {
        self.fee
    }

    #[inline]
    pub fn is_urgent(&self) -> bool {
        self.ttl == 1
    }

    /// The transaction as seen one step later, or `None` if it expires.
    #[inline]
    pub(crate) fn aged(self) -> Option<Self> {
        (self.ttl > 1).then(|| Transaction {
            ttl: self.ttl - 1,
            fee: self.fee,
        })
    }
}

impl fmt::Display for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ttl, self.fee)
    }
}

/// Discount factor, miner ratio and horizon of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinerParams {
    lambda: f64,
    gamma: f64,
    horizon: usize,
}

impl MinerParams {
    pub fn new(lambda: f64, gamma: f64, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParams(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParams(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        if horizon == 0 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        Ok(MinerParams { lambda, gamma, horizon })
    }

    /// Parameters whose horizon covers every step at which `schedule` can
    /// still be served.
    pub fn for_schedule(lambda: f64, gamma: f64, schedule: &TransactionSchedule) -> Result<Self> {
        MinerParams::new(lambda, gamma, horizon_of(schedule).max(1))
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(self, horizon: usize) -> Result<Self> {
        MinerParams::new(self.lambda, self.gamma, horizon)
    }

    /// Revenue weight of a fee collected at `step`: `gamma(step) * lambda^step`,
    /// where the block at step 0 is always the miner's own.
    #[inline]
    pub fn weight(&self, step: usize) -> f64 {
        let gamma = if step == 0 { 1.0 } else { self.gamma };
        gamma * pow(self.lambda, step)
    }
}

#[inline]
fn pow(base: f64, exp: usize) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}

/// The adversary's emissions, indexed by step. Unlisted steps emit nothing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransactionSchedule {
    label: String,
    emissions: BTreeMap<usize, Vec<Transaction>>,
}

impl TransactionSchedule {
    pub fn new(label: impl Into<String>) -> Self {
        TransactionSchedule {
            label: label.into(),
            emissions: BTreeMap::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// Appends `tx` to the emissions of `step`.
    pub fn push(&mut self, step: usize, tx: Transaction) {
        self.emissions.entry(step).or_default().push(tx);
    }

    pub fn extend(&mut self, step: usize, txs: impl IntoIterator<Item = Transaction>) {
        let entry = self.emissions.entry(step).or_default();
        entry.extend(txs);
        if entry.is_empty() {
            self.emissions.remove(&step);
        }
    }

    pub fn with(mut self, step: usize, txs: impl IntoIterator<Item = Transaction>) -> Self {
        self.extend(step, txs);
        self
    }

    /// Emissions at `step`; empty for unlisted steps.
    pub fn at(&self, step: usize) -> &[Transaction] {
        self.emissions.get(&step).map_or(&[], Vec::as_slice)
    }

    /// Non-empty steps in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[Transaction])> {
        self.emissions
            .iter()
            .filter(|(_, txs)| !txs.is_empty())
            .map(|(&step, txs)| (step, txs.as_slice()))
    }

    /// Every emitted transaction together with its arrival step, in step order
    /// and then emission order.
    pub fn arrivals(&self) -> impl Iterator<Item = (usize, Transaction)> + '_ {
        self.iter()
            .flat_map(|(step, txs)| txs.iter().map(move |&tx| (step, tx)))
    }

    pub fn last_step(&self) -> Option<usize> {
        self.iter().map(|(step, _)| step).last()
    }

    pub fn transaction_count(&self) -> usize {
        self.emissions.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.transaction_count() == 0
    }

    /// Multiplies every fee by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = TransactionSchedule::new(self.label.clone());
        for (step, tx) in self.arrivals() {
            out.push(step, Transaction::new(tx.ttl(), tx.fee() * factor)?);
        }
        Ok(out)
    }
}

/// Last step at which any transaction of `schedule` could still be
/// allocated, `max(step + ttl - 1)`, or 0 for an empty schedule.
pub fn horizon_of(schedule: &TransactionSchedule) -> usize {
    schedule
        .arrivals()
        .map(|(step, tx)| step + tx.ttl() as usize - 1)
        .max()
        .unwrap_or(0)
}

/// Valid, unallocated, unexpired transactions carried into a step.
///
/// TTLs are already expressed relative to the step the state belongs to.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MempoolState {
    alive: Vec<Transaction>,
}

impl MempoolState {
    pub fn empty() -> Self {
        MempoolState::default()
    }

    pub fn members(&self) -> &[Transaction] {
        &self.alive
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    /// The set offered to a policy at a step: the carried pool followed by the
    /// fresh emissions.
    pub fn offer(&self, emitted: &[Transaction]) -> Vec<Transaction> {
        let mut available = Vec::with_capacity(self.alive.len() + emitted.len());
        available.extend_from_slice(&self.alive);
        available.extend_from_slice(emitted);
        available
    }

    /// Removes `available[allocated]` (if any) and ages the rest.
    pub(crate) fn carry(available: Vec<Transaction>, allocated: Option<usize>) -> Self {
        let mut tagged: Vec<((), Transaction)> = available.into_iter().map(|tx| ((), tx)).collect();
        transition(&mut tagged, allocated);
        MempoolState {
            alive: tagged.into_iter().map(|(_, tx)| tx).collect(),
        }
    }

    /// Mempool of the next step given this step's emissions and allocation.
    pub fn step(&self, emitted: &[Transaction], allocated: Option<&Transaction>) -> Result<Self> {
        let available = self.offer(emitted);
        let index =
            match allocated {
                None => None,
                Some(target) => Some(available.iter().position(|tx| tx == target).ok_or(
                    Error::AllocatedNotPresent {
                        ttl: target.ttl(),
                        fee: target.fee(),
                    },
                )?),
            };
        Ok(MempoolState::carry(available, index))
    }
}

/// The transition on tagged items, so callers can track identities alongside.
pub(crate) fn transition<T>(items: &mut Vec<(T, Transaction)>, allocated: Option<usize>) {
    if let Some(index) = allocated {
        items.remove(index);
    }
    items.retain_mut(|(_, tx)| match tx.aged() {
        Some(next) => {
            *tx = next;
            true
        }
        None => false,
    });
}

/// Free-function form of [`MempoolState::step`].
pub fn mempool_step(
    pool: &MempoolState,
    emitted: &[Transaction],
    allocated: Option<&Transaction>,
) -> Result<MempoolState> {
    pool.step(emitted, allocated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(ttl: u32, fee: f64) -> Transaction {
        Transaction::new(ttl, fee).unwrap()
    }

    fn example() -> TransactionSchedule {
        TransactionSchedule::new("example")
            .with(1, [tx(1, 2.0), tx(2, 4.0)])
            .with(2, [tx(2, 6.0)])
            .with(4, [tx(1, 8.0)])
    }

    #[test]
    fn transaction_validation() {
        assert!(Transaction::new(0, 1.0).is_err());
        assert!(Transaction::new(1, -0.5).is_err());
        assert!(Transaction::new(1, f64::NAN).is_err());
        assert!(Transaction::new(1, 0.0).is_ok());
        assert_eq!(Transaction::unbounded(3.0, 9).unwrap().ttl(), 10);
    }

    #[test]
    fn params_validation() {
        assert!(MinerParams::new(1.5, 1.0, 3).is_err());
        assert!(MinerParams::new(0.5, -0.1, 3).is_err());
        assert!(MinerParams::new(0.5, 1.0, 0).is_err());
        let p = MinerParams::new(0.5, 0.1, 3).unwrap();
        assert_eq!(p.weight(0), 1.0);
        assert_eq!(p.weight(2), 0.1 * 0.25);
        let myopic = MinerParams::new(0.0, 1.0, 3).unwrap();
        assert_eq!(myopic.weight(0), 1.0);
        assert_eq!(myopic.weight(1), 0.0);
    }

    #[test]
    fn mempool_lets_the_urgent_one_expire() {
        let next = MempoolState::empty()
            .step(&[tx(1, 2.0), tx(2, 4.0)], Some(&tx(2, 4.0)))
            .unwrap();
        assert!(next.is_empty());
    }

    #[test]
    fn mempool_empty_case() {
        let next = mempool_step(&MempoolState::empty(), &[], None).unwrap();
        assert!(next.is_empty());
    }

    #[test]
    fn mempool_decrements_survivors() {
        let pool = MempoolState::empty().step(&[tx(4, 5.0)], None).unwrap();
        assert_eq!(pool.members(), &[tx(3, 5.0)]);
        let next = pool.step(&[tx(1, 1.0)], Some(&tx(1, 1.0))).unwrap();
        assert_eq!(next.members(), &[tx(2, 5.0)]);
    }

    #[test]
    fn mempool_removes_a_single_copy() {
        let next = MempoolState::empty()
            .step(&[tx(2, 3.0), tx(2, 3.0)], Some(&tx(2, 3.0)))
            .unwrap();
        assert_eq!(next.members(), &[tx(1, 3.0)]);
    }

    #[test]
    fn mempool_rejects_unknown_allocation() {
        let err = MempoolState::empty()
            .step(&[tx(2, 3.0)], Some(&tx(2, 4.0)))
            .unwrap_err();
        assert!(matches!(err, Error::AllocatedNotPresent { .. }));
    }

    #[test]
    fn horizon_of_examples() {
        let single = TransactionSchedule::new("").with(1, [tx(1, 2.0), tx(2, 4.0)]);
        assert_eq!(horizon_of(&single), 2);
        assert_eq!(horizon_of(&TransactionSchedule::new("")), 0);
        assert_eq!(horizon_of(&example()), 4);
    }

    #[test]
    fn schedule_accessors() {
        let s = example();
        assert_eq!(s.at(3), &[]);
        assert_eq!(s.at(2), &[tx(2, 6.0)]);
        assert_eq!(s.transaction_count(), 4);
        assert_eq!(s.last_step(), Some(4));
        let arrivals: Vec<_> = s.arrivals().map(|(step, _)| step).collect();
        assert_eq!(arrivals, vec![1, 1, 2, 4]);
        let doubled = s.scaled(2.0).unwrap();
        assert_eq!(doubled.at(4), &[tx(1, 16.0)]);
    }
}
