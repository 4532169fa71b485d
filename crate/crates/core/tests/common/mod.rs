// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use discsched::{Transaction, TransactionSchedule};
use proptest::prelude::*;
use rand::Rng;

pub fn tx(ttl: u32, fee: f64) -> Transaction {
    Transaction::new(ttl, fee).unwrap()
}

pub fn build(label: &str, items: &[(usize, u32, f64)]) -> TransactionSchedule {
    let mut s = TransactionSchedule::new(label);
    for &(step, ttl, fee) in items {
        s.push(step, tx(ttl, fee));
    }
    s
}

/// Up to `max_tx` transactions arriving in `0..=max_step` with TTLs chosen
/// so nothing outlives `max_horizon`.
pub fn schedule_strategy(
    max_tx: usize,
    max_step: usize,
    max_horizon: usize,
) -> impl Strategy<Value = TransactionSchedule> {
    prop::collection::vec((0..=max_step, 1u32..=4, 0.0f64..10.0), 0..=max_tx).prop_map(move |items| {
        let clipped: Vec<_> = items
            .into_iter()
            .map(|(step, ttl, fee)| {
                let room = (max_horizon + 1 - step) as u32;
                (step, ttl.min(room), fee)
            })
            .collect();
        build("fuzz", &clipped)
    })
}

/// Schedules with integer fees, for exact-arithmetic checks.
pub fn integer_schedule_strategy(max_tx: usize, max_step: usize) -> impl Strategy<Value = TransactionSchedule> {
    prop::collection::vec((0..=max_step, 1u32..=4, 0u32..20), 0..=max_tx).prop_map(|items| {
        let items: Vec<_> = items.into_iter().map(|(s, t, f)| (s, t, f as f64)).collect();
        build("int", &items)
    })
}

/// Seeded counterpart of [`schedule_strategy`] for the acceptance runs.
pub fn random_schedule(rng: &mut impl Rng, max_tx: usize, max_horizon: usize) -> TransactionSchedule {
    let count = rng.random_range(1..=max_tx);
    let items: Vec<_> = (0..count)
        .map(|_| {
            let step = rng.random_range(0..=max_horizon);
            let room = (max_horizon + 1 - step) as u32;
            let ttl = rng.random_range(1..=room.min(4));
            let fee = rng.random_range(0.0..10.0);
            (step, ttl, fee)
        })
        .collect();
    build("fuzz", &items)
}
