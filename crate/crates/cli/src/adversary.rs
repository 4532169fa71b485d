// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Adversary strings.
//!
//! `family` or `family:key=value,key=value`:
//!
//! | family        | keys                                    |
//! |---------------|-----------------------------------------|
//! | `greedy_lb`   | `eps` (default 1e-6)                    |
//! | `det_psi`     | `n`                                     |
//! | `det_general` | `x` (`;`-separated, starting at 1), `tail` |
//! | `golden`      | `kind` (A1..A4), `eps`, `horizon`, `n`  |
//! | `adaptive`    | `n`                                     |
//!
//! Anything else is read as the path of a schedule JSON file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use discsched::adversaries::{a1_truncation_horizon, DEFAULT_EPSILON};
use discsched::io::schedule_from_json;
use discsched::{
    det_ub_general_adversary, det_ub_psi_adversary, golden_adversary, greedy_lb_adversary, AdversaryFamilyParams,
    GoldenKind, TransactionSchedule,
};

use crate::CliError;

/// Tail tolerance for the A1 truncation when no horizon is given.
pub const A1_TAIL_TOL: f64 = 1e-9;

const FAMILIES: &str = "greedy_lb, det_psi, det_general, golden, adaptive or a schedule file";

#[derive(Clone, Debug, PartialEq)]
pub enum AdversarySpec {
    GreedyLb {
        epsilon: f64,
    },
    DetPsi {
        n: Option<usize>,
    },
    DetGeneral {
        x: Vec<f64>,
        tail: bool,
    },
    Golden {
        kind: GoldenKind,
        epsilon: f64,
        horizon: Option<usize>,
        n: Option<usize>,
    },
    Adaptive {
        n: Option<usize>,
    },
    File(PathBuf),
}

fn bad(message: impl Into<String>) -> CliError {
    CliError::config("adversary", message)
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(format!("{key}={value:?} is not a valid number")))
}

impl FromStr for AdversarySpec {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let (family, rest) = match text.split_once(':') {
            Some((f, r)) => (f.trim(), r),
            None => (text.trim(), ""),
        };
        let known = ["greedy_lb", "det_psi", "det_general", "golden", "adaptive"];
        if !known.contains(&family) {
            let path = PathBuf::from(text);
            if path.is_file() {
                return Ok(AdversarySpec::File(path));
            }
            return Err(bad(format!("{text:?} is neither a family ({FAMILIES}) nor a file")));
        }
        let mut keys = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("{pair:?} is not key=value")))?;
            if keys.insert(k.trim(), v.trim()).is_some() {
                return Err(bad(format!("key {k:?} given twice")));
            }
        }
        let mut take = |key: &str| keys.remove(key);
        let spec = match family {
            "greedy_lb" => AdversarySpec::GreedyLb {
                epsilon: take("eps").map_or(Ok(DEFAULT_EPSILON), |v| number("eps", v))?,
            },
            "det_psi" => AdversarySpec::DetPsi {
                n: take("n").map(|v| number("n", v)).transpose()?,
            },
            "det_general" => {
                let x = take("x").ok_or_else(|| bad("det_general needs x=1;x1;...;xn"))?;
                let x = x.split(';').map(|v| number("x", v)).collect::<Result<Vec<f64>, _>>()?;
                let tail = match take("tail") {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(v) => return Err(bad(format!("tail={v:?} is not true or false"))),
                };
                AdversarySpec::DetGeneral { x, tail }
            }
            "golden" => AdversarySpec::Golden {
                kind: take("kind")
                    .ok_or_else(|| bad("golden needs kind=A1..A4"))?
                    .parse()
                    .map_err(|e: discsched::Error| bad(e.to_string()))?,
                epsilon: take("eps").map_or(Ok(DEFAULT_EPSILON), |v| number("eps", v))?,
                horizon: take("horizon").map(|v| number("horizon", v)).transpose()?,
                n: take("n").map(|v| number("n", v)).transpose()?,
            },
            _ => AdversarySpec::Adaptive {
                n: take("n").map(|v| number("n", v)).transpose()?,
            },
        };
        if let Some(key) = keys.keys().next() {
            return Err(bad(format!("{family} does not take {key:?}")));
        }
        Ok(spec)
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |key: &str, v: Option<usize>| v.map(|v| format!(",{key}={v}")).unwrap_or_default();
        match self {
            AdversarySpec::GreedyLb { epsilon } => write!(f, "greedy_lb:eps={epsilon}"),
            AdversarySpec::DetPsi { n } => write!(f, "det_psi{}", opt("n", *n).replacen(',', ":", 1)),
            AdversarySpec::DetGeneral { x, tail } => {
                let x: Vec<String> = x.iter().map(f64::to_string).collect();
                write!(f, "det_general:x={},tail={tail}", x.join(";"))
            }
            AdversarySpec::Golden {
                kind,
                epsilon,
                horizon,
                n,
            } => write!(
                f,
                "golden:kind={kind},eps={epsilon}{}{}",
                opt("horizon", *horizon),
                opt("n", *n)
            ),
            AdversarySpec::Adaptive { n } => write!(f, "adaptive{}", opt("n", *n).replacen(',', ":", 1)),
            AdversarySpec::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl AdversarySpec {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, AdversarySpec::Adaptive { .. })
    }

    /// Replaces the family's `n` (families without one are unchanged).
    pub fn with_n(&self, value: usize) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            AdversarySpec::DetPsi { n } | AdversarySpec::Adaptive { n } | AdversarySpec::Golden { n, .. } => {
                *n = Some(value)
            }
            _ => {}
        }
        spec
    }

    /// Fills `n` from the command line when the string left it out.
    pub fn or_n(&self, value: Option<usize>) -> Self {
        match (self.n(), value) {
            (None, Some(v)) => self.with_n(v),
            _ => self.clone(),
        }
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            AdversarySpec::DetPsi { n } | AdversarySpec::Adaptive { n } | AdversarySpec::Golden { n, .. } => *n,
            _ => None,
        }
    }

    fn require_n(&self) -> Result<usize, CliError> {
        self.n()
            .ok_or_else(|| bad(format!("{self} needs n (in the string or via --n)")))
    }

    /// Number of adaptive rounds.
    pub fn adaptive_n(&self) -> Result<usize, CliError> {
        self.require_n()
    }

    /// The fixed schedule this adversary emits at discount `lambda`.
    pub fn schedule(&self, lambda: f64) -> Result<TransactionSchedule, CliError> {
        let wrap = |e: discsched::Error| bad(e.to_string());
        match self {
            AdversarySpec::GreedyLb { epsilon } => greedy_lb_adversary(*epsilon).map_err(wrap),
            AdversarySpec::DetPsi { .. } => det_ub_psi_adversary(self.require_n()?, lambda).map_err(wrap),
            AdversarySpec::DetGeneral { x, tail } => det_ub_general_adversary(x, *tail).map_err(wrap),
            AdversarySpec::Golden {
                kind,
                epsilon,
                horizon,
                n,
            } => {
                let horizon = horizon.unwrap_or_else(|| a1_truncation_horizon(lambda, A1_TAIL_TOL));
                let params = AdversaryFamilyParams::new(lambda, *epsilon, n.unwrap_or(1), horizon).map_err(wrap)?;
                golden_adversary(*kind, &params).map_err(wrap)
            }
            AdversarySpec::Adaptive { .. } => Err(bad("the adaptive adversary has no fixed schedule")),
            AdversarySpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
                schedule_from_json(&text, None).map_err(wrap)
            }
        }
    }
}
