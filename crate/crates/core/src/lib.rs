// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Online allocation of deadline-bearing, fee-paying transactions into
//! single-slot blocks whose revenue is discounted over time.
//!
//! The crate simulates allocation policies against transaction schedules,
//! computes the clairvoyant optimum by bipartite matching, builds the
//! adversarial schedule families behind the known competitive-ratio bounds,
//! and evaluates those bounds in closed form.
//!
//! ```
//! use discsched::{simulate, opt_matching, MinerParams, PolicyDescriptor, Transaction, TransactionSchedule};
//!
//! let tx = |ttl, fee| Transaction::new(ttl, fee).unwrap();
//! let schedule = TransactionSchedule::new("example")
//!     .with(1, [tx(1, 2.0), tx(2, 4.0)])
//!     .with(2, [tx(2, 6.0)])
//!     .with(4, [tx(1, 8.0)]);
//! let params = MinerParams::for_schedule(1.0, 1.0, &schedule).unwrap();
//!
//! let greedy = simulate(&PolicyDescriptor::Greedy, &schedule, &params, 0).unwrap();
//! assert_eq!(greedy.revenue, 18.0);
//! assert_eq!(opt_matching(&schedule, &params).revenue, 20.0);
//! ```

// `!(x > 0.0)` is how NaN gets rejected along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversaries;
pub mod bounds;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod sim;

pub use adversaries::{
    det_ub_general_adversary, det_ub_psi_adversary, golden_adversary, greedy_lb_adversary, AdaptiveAdversary,
    AdversaryFamilyParams, GoldenKind,
};
pub use bounds::{bound_value, psi, semi_myopic_threshold, solve_equal_ratio_system, BoundKind};
pub use error::{Error, Result};
pub use model::{horizon_of, mempool_step, MempoolState, MinerParams, Transaction, TransactionSchedule};
pub use oracle::{competitive_ratio_point, opt_bruteforce, opt_matching, OptSolution, RatioPoint};
pub use policies::{Policy, PolicyChoice, PolicyDescriptor, PolicySpec};
pub use sim::{discounted_revenue, simulate, SimulationTrace};
