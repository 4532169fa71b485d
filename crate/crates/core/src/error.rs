// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid transaction: {0}")]
    InvalidTransaction(String),

    #[error("invalid miner parameters: {0}")]
    InvalidParams(String),

    #[error("allocated transaction {ttl}/{fee} is neither in the mempool nor in the emitted set")]
    AllocatedNotPresent { ttl: u32, fee: f64 },

    #[error("policy chose a transaction that was not presented at step {step}")]
    PolicyChoseUnavailable { step: usize },

    #[error("schedule emits at step {step}, beyond the horizon {horizon}")]
    ScheduleBeyondHorizon { step: usize, horizon: usize },

    #[error("instance too large for exhaustive search: {transactions} transactions, horizon {horizon}")]
    InstanceTooLarge { transactions: usize, horizon: usize },

    #[error("offline optimum is zero while the policy earned {policy_revenue}")]
    DivisionByZero { policy_revenue: f64 },

    #[error("fee at position {index} is not strictly positive")]
    NonPositiveFee { index: usize },

    #[error("no sign change of the residual on [{lo}, {hi}] (residuals {f_lo}, {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("solver stopped with residual {residual:e}, above the tolerance {tol:e}")]
    NotConverged { residual: f64, tol: f64 },

    #[error("solved ratios are not increasing at index {index} ({prev} then {next})")]
    NonMonotoneRatios { index: usize, prev: f64, next: f64 },

    #[error("adaptive adversary protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid adversary: {0}")]
    InvalidAdversary(String),

    #[error("parse error: {0}")]
    Parse(String),
}
