// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Seed splitting.
//!
//! Every random draw in a run descends from one 64-bit seed. Sample `k` reads
//! ChaCha stream `k` of that seed, so samples are independent of each other
//! and of the order in which they are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for sample `stream` under `seed`. Stream 0 is the plain seed.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
