// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! The guide's chapters, compiled so that `cargo test` runs their snippets.
//! One module per chapter, to tell failing snippets apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/policies.md")]
pub mod policies {}
#[doc = include_str!("../../../book/src/optimum.md")]
pub mod optimum {}
#[doc = include_str!("../../../book/src/adversaries.md")]
pub mod adversaries {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
