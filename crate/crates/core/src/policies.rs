// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Online allocation policies.
//!
//! Every policy sees only the set of transactions available at the current
//! step. Within any candidate class, ties on fee go to the lower TTL and then
//! to the earlier position in `available` (older mempool members come first).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::bounds::psi;
use crate::error::{Error, Result};
use crate::model::Transaction;

/// Outcome of one policy decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyChoice {
    /// Position of the chosen transaction in the presented slice.
    pub index: Option<usize>,
    pub chosen: Option<Transaction>,
    /// Probability of a TTL=1 pick, before any coin is flipped.
    pub urgent_probability: f64,
}

impl PolicyChoice {
    pub fn none() -> Self {
        PolicyChoice {
            index: None,
            chosen: None,
            urgent_probability: 0.0,
        }
    }

    fn pick(available: &[Transaction], index: Option<usize>) -> Self {
        match index {
            None => PolicyChoice::none(),
            Some(i) => PolicyChoice {
                index: Some(i),
                chosen: Some(available[i]),
                urgent_probability: if available[i].is_urgent() { 1.0 } else { 0.0 },
            },
        }
    }
}

pub trait Policy: Send + Sync {
    fn choose(&self, available: &[Transaction], rng: &mut dyn RngCore) -> PolicyChoice;
}

/// Best member satisfying `keep`: highest fee, then lowest TTL, then earliest.
fn best_where(available: &[Transaction], keep: impl Fn(&Transaction) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, tx) in available.iter().enumerate() {
        if !keep(tx) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &available[b];
                tx.fee() > cur.fee() || (tx.fee() == cur.fee() && tx.ttl() < cur.ttl())
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

fn min_ttl(available: &[Transaction]) -> Option<u32> {
    available.iter().map(Transaction::ttl).min()
}

pub fn greedy_choose(available: &[Transaction]) -> PolicyChoice {
    PolicyChoice::pick(available, best_where(available, |_| true))
}

/// Takes the best TTL>1 transaction only when it pays at least `psi` times
/// the best TTL=1 transaction.
pub fn immediacy_choose(available: &[Transaction], psi: f64) -> PolicyChoice {
    let urgent = best_where(available, Transaction::is_urgent);
    let patient = best_where(available, |tx| !tx.is_urgent());
    let index = match (urgent, patient) {
        (Some(u), Some(p)) => {
            if available[p].fee() / available[u].fee() >= psi {
                Some(p)
            } else {
                Some(u)
            }
        }
        (u, p) => u.or(p),
    };
    PolicyChoice::pick(available, index)
}

/// Earliest-deadline variant: prefers the best minimum-TTL transaction unless
/// the overall best pays more than `psi` times as much.
pub fn mg_choose(available: &[Transaction], psi: f64) -> PolicyChoice {
    let Some(e) = min_ttl(available) else {
        return PolicyChoice::none();
    };
    let earliest = best_where(available, |tx| tx.ttl() == e).expect("min ttl is present");
    let highest = best_where(available, |_| true).expect("non-empty");
    let index = if available[earliest].fee() >= available[highest].fee() / psi {
        earliest
    } else {
        highest
    };
    PolicyChoice::pick(available, Some(index))
}

/// Probability that RMIX picks a TTL=1 transaction from `available`.
pub fn rmix_urgent_probability(available: &[Transaction], lambda: f64) -> f64 {
    let Some(urgent) = best_where(available, Transaction::is_urgent) else {
        return 0.0;
    };
    let highest = best_where(available, |_| true).expect("non-empty");
    let (fee_urg, fee_max) = (available[urgent].fee(), available[highest].fee());
    if fee_urg >= fee_max {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    ((lambda + (fee_urg / fee_max).ln()) / lambda).clamp(0.0, 1.0)
}

/// Randomized choice between the best minimum-TTL transaction and the best
/// overall, with threshold `e^x`, `x ~ U[-lambda, 0]`.
pub fn rmix_choose(available: &[Transaction], lambda: f64, rng: &mut dyn RngCore) -> PolicyChoice {
    let Some(e) = min_ttl(available) else {
        return PolicyChoice::none();
    };
    let urgent = best_where(available, |tx| tx.ttl() == e).expect("min ttl is present");
    let highest = best_where(available, |_| true).expect("non-empty");
    let x = -lambda * rng.random::<f64>();
    let index = if available[urgent].fee() >= x.exp() * available[highest].fee() {
        urgent
    } else {
        highest
    };
    PolicyChoice {
        index: Some(index),
        chosen: Some(available[index]),
        urgent_probability: rmix_urgent_probability(available, lambda),
    }
}

/// A policy with all parameters resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyDescriptor {
    Greedy,
    ImmediacyBiased { psi: f64 },
    Rmix { lambda: f64 },
    Mg { psi: f64 },
}

impl PolicyDescriptor {
    pub fn immediacy(psi: f64) -> Result<Self> {
        check_psi(psi)?;
        Ok(PolicyDescriptor::ImmediacyBiased { psi })
    }

    /// The TTL=1-first policy: immediacy-biased with an infinite threshold.
    pub fn always_urgent() -> Self {
        PolicyDescriptor::ImmediacyBiased { psi: f64::INFINITY }
    }

    pub fn rmix(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidPolicy(format!(
                "rmix lambda must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(PolicyDescriptor::Rmix { lambda })
    }

    pub fn mg(psi: f64) -> Result<Self> {
        check_psi(psi)?;
        Ok(PolicyDescriptor::Mg { psi })
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, PolicyDescriptor::Rmix { .. })
    }
}

fn check_psi(psi: f64) -> Result<()> {
    if psi >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPolicy(format!("psi must be at least 1, got {psi}")))
    }
}

impl Policy for PolicyDescriptor {
    fn choose(&self, available: &[Transaction], rng: &mut dyn RngCore) -> PolicyChoice {
        match *self {
            PolicyDescriptor::Greedy => greedy_choose(available),
            PolicyDescriptor::ImmediacyBiased { psi } => immediacy_choose(available, psi),
            PolicyDescriptor::Rmix { lambda } => rmix_choose(available, lambda, rng),
            PolicyDescriptor::Mg { psi } => mg_choose(available, psi),
        }
    }
}

impl fmt::Display for PolicyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyDescriptor::Greedy => write!(f, "greedy"),
            PolicyDescriptor::ImmediacyBiased { psi } if psi.is_infinite() => write!(f, "ib:inf"),
            PolicyDescriptor::ImmediacyBiased { psi } => write!(f, "ib:{psi}"),
            PolicyDescriptor::Rmix { lambda } => write!(f, "rmix:{lambda}"),
            PolicyDescriptor::Mg { psi } => write!(f, "mg:{psi}"),
        }
    }
}

/// Threshold as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Value(f64),
    /// `psi(lambda)` of the run.
    Auto,
}

impl Threshold {
    fn resolve(self, lambda: f64) -> f64 {
        match self {
            Threshold::Value(v) => v,
            Threshold::Auto => psi(lambda),
        }
    }
}

/// A policy whose parameters may depend on the run's discount factor.
///
/// Accepted forms: `greedy`, `ib:<psi|auto|inf>`, `rmix`, `rmix:<lambda>`,
/// `mg:<psi|auto>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicySpec {
    Greedy,
    ImmediacyBiased(Threshold),
    Rmix(Option<f64>),
    Mg(Threshold),
}

impl PolicySpec {
    pub fn resolve(self, lambda: f64) -> Result<PolicyDescriptor> {
        match self {
            PolicySpec::Greedy => Ok(PolicyDescriptor::Greedy),
            PolicySpec::ImmediacyBiased(t) => PolicyDescriptor::immediacy(t.resolve(lambda)),
            PolicySpec::Rmix(l) => PolicyDescriptor::rmix(l.unwrap_or(lambda)),
            PolicySpec::Mg(t) => PolicyDescriptor::mg(t.resolve(lambda)),
        }
    }
}

fn parse_threshold(text: &str) -> Result<Threshold> {
    match text {
        "auto" => Ok(Threshold::Auto),
        "inf" | "infinity" => Ok(Threshold::Value(f64::INFINITY)),
        _ => {
            let value: f64 = text
                .parse()
                .map_err(|_| Error::InvalidPolicy(format!("cannot read threshold {text:?}")))?;
            check_psi(value)?;
            Ok(Threshold::Value(value))
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (kind, arg) = match text.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (text.trim(), None),
        };
        match (kind, arg) {
            ("greedy", None) => Ok(PolicySpec::Greedy),
            ("ib", Some(a)) => Ok(PolicySpec::ImmediacyBiased(parse_threshold(a)?)),
            ("mg", Some(a)) => Ok(PolicySpec::Mg(parse_threshold(a)?)),
            ("rmix", None) => Ok(PolicySpec::Rmix(None)),
            ("rmix", Some(a)) => {
                let lambda: f64 = a
                    .parse()
                    .map_err(|_| Error::InvalidPolicy(format!("cannot read rmix lambda {a:?}")))?;
                PolicyDescriptor::rmix(lambda)?;
                Ok(PolicySpec::Rmix(Some(lambda)))
            }
            _ => Err(Error::InvalidPolicy(format!(
                "unknown policy {text:?}; expected greedy, ib:<psi|auto|inf>, rmix or mg:<psi|auto>"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn tx(ttl: u32, fee: f64) -> Transaction {
        Transaction::new(ttl, fee).unwrap()
    }

    const EPS: f64 = 1e-6;

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_choose(&[tx(1, 2.0), tx(2, 4.0)]).chosen, Some(tx(2, 4.0)));
        assert_eq!(greedy_choose(&[]).chosen, None);
        assert_eq!(greedy_choose(&[tx(3, 5.0), tx(1, 5.0)]).chosen, Some(tx(1, 5.0)));
        let twins = greedy_choose(&[tx(2, 5.0), tx(2, 5.0)]);
        assert_eq!(twins.index, Some(0));
    }

    #[test]
    fn immediacy_examples() {
        let p = psi(0.5);
        assert_eq!(
            immediacy_choose(&[tx(1, 1.0), tx(2, p - EPS)], p).chosen,
            Some(tx(1, 1.0))
        );
        assert_eq!(
            immediacy_choose(&[tx(1, 1.0), tx(2, p + EPS)], p).chosen,
            Some(tx(2, p + EPS))
        );
        assert_eq!(immediacy_choose(&[tx(5, 10.0)], p).chosen, Some(tx(5, 10.0)));
        assert_eq!(immediacy_choose(&[], p).chosen, None);
    }

    #[test]
    fn immediacy_boundaries() {
        let set = [tx(1, 3.0), tx(4, 3.0), tx(2, 2.0)];
        assert_eq!(immediacy_choose(&set, 1.0).chosen, Some(tx(4, 3.0)));
        assert_eq!(immediacy_choose(&set, f64::INFINITY).chosen, Some(tx(1, 3.0)));
        let urgent_is_best = [tx(1, 9.0), tx(3, 4.0)];
        assert_eq!(
            immediacy_choose(&urgent_is_best, 1e12).chosen,
            greedy_choose(&urgent_is_best).chosen
        );
    }

    #[test]
    fn mg_examples() {
        let p = psi(0.5);
        let both = [tx(1, 1.0), tx(2, p - EPS)];
        assert_eq!(mg_choose(&both, p).chosen, Some(tx(1, 1.0)));
        assert_eq!(mg_choose(&both, p).chosen, immediacy_choose(&both, p).chosen);
        assert_eq!(mg_choose(&[tx(2, 1.0), tx(5, p + EPS)], p).chosen, Some(tx(5, p + EPS)));
        assert_eq!(mg_choose(&[tx(3, 7.0)], p).chosen, Some(tx(3, 7.0)));
    }

    #[test]
    fn rmix_equal_fees_prefers_urgent() {
        let mut rng = stream_rng(1, 0);
        for lambda in [0.0, 0.3, 1.0] {
            for _ in 0..100 {
                let c = rmix_choose(&[tx(1, 10.0), tx(3, 10.0)], lambda, &mut rng);
                assert_eq!(c.chosen, Some(tx(1, 10.0)));
                assert_eq!(c.urgent_probability, 1.0);
            }
        }
    }

    #[test]
    fn rmix_below_support_never_urgent() {
        let lambda: f64 = 0.7;
        let set = [tx(1, (-lambda).exp() * 5.0 - 1e-9), tx(2, 5.0)];
        let mut rng = stream_rng(2, 0);
        let urgent = (0..100_000)
            .filter(|_| rmix_choose(&set, lambda, &mut rng).chosen == Some(set[0]))
            .count();
        assert_eq!(urgent, 0);
        assert_eq!(rmix_urgent_probability(&set, lambda), 0.0);
    }

    #[test]
    fn rmix_half_split() {
        let lambda = 0.8;
        let set = [tx(1, 1.0), tx(2, (lambda / 2.0f64).exp())];
        let p = rmix_urgent_probability(&set, lambda);
        assert!((p - 0.5).abs() < 1e-12);
        let n = 100_000;
        let mut rng = stream_rng(3, 0);
        let hits = (0..n)
            .filter(|_| rmix_choose(&set, lambda, &mut rng).chosen == Some(set[0]))
            .count();
        let freq = hits as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma, "frequency {freq}");
    }

    #[test]
    fn rmix_probability_examples() {
        let lambda = 0.6;
        assert_eq!(rmix_urgent_probability(&[tx(1, 2.0), tx(2, 2.0)], lambda), 1.0);
        let edge = [tx(1, 1.0), tx(2, lambda.exp())];
        assert!(rmix_urgent_probability(&edge, lambda).abs() < 1e-12);
        assert_eq!(rmix_urgent_probability(&[tx(2, 1.0), tx(3, 2.0)], lambda), 0.0);
        assert_eq!(rmix_urgent_probability(&[tx(1, 1.0), tx(1, 2.0)], lambda), 1.0);
        assert_eq!(rmix_urgent_probability(&[tx(1, 1.0), tx(2, 2.0)], 0.0), 0.0);
    }

    #[test]
    fn parse_specs() {
        assert_eq!("greedy".parse::<PolicySpec>().unwrap(), PolicySpec::Greedy);
        assert_eq!(
            "ib:auto".parse::<PolicySpec>().unwrap(),
            PolicySpec::ImmediacyBiased(Threshold::Auto)
        );
        assert_eq!(
            "ib:inf".parse::<PolicySpec>().unwrap().resolve(0.5).unwrap(),
            PolicyDescriptor::always_urgent()
        );
        assert_eq!(
            "mg:1.5".parse::<PolicySpec>().unwrap().resolve(0.5).unwrap(),
            PolicyDescriptor::Mg { psi: 1.5 }
        );
        assert_eq!(
            "rmix".parse::<PolicySpec>().unwrap().resolve(0.25).unwrap(),
            PolicyDescriptor::Rmix { lambda: 0.25 }
        );
        assert_eq!(
            "ib:auto".parse::<PolicySpec>().unwrap().resolve(1.0).unwrap(),
            PolicyDescriptor::ImmediacyBiased { psi: psi(1.0) }
        );
        assert!("ib:0.5".parse::<PolicySpec>().is_err());
        assert!("rmix:2".parse::<PolicySpec>().is_err());
        assert!("fifo".parse::<PolicySpec>().is_err());
        assert!("ib".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for d in [
            PolicyDescriptor::Greedy,
            PolicyDescriptor::always_urgent(),
            PolicyDescriptor::ImmediacyBiased { psi: 1.25 },
            PolicyDescriptor::Rmix { lambda: 0.5 },
            PolicyDescriptor::Mg { psi: 2.0 },
        ] {
            let back = d.to_string().parse::<PolicySpec>().unwrap().resolve(0.9).unwrap();
            assert_eq!(back, d);
        }
    }
}
