// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Adversarial schedule families.
//!
//! The fixed families are plain [`TransactionSchedule`]s. The adaptive
//! adversary for randomized policies is a small state machine that is asked
//! for its emissions, shown the policy's urgency probability and realized
//! pick, and then makes its own allocation.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::bounds::psi;
use crate::error::{Error, Result};
use crate::model::{MempoolState, MinerParams, Transaction, TransactionSchedule};
use crate::oracle::{mean_sd, opt_matching, Z_99};
use crate::policies::Policy;
use crate::rng::stream_rng;
use crate::sim::discounted_revenue;

pub const DEFAULT_EPSILON: f64 = 1e-6;

fn tx(ttl: u32, fee: f64) -> Result<Transaction> {
    Transaction::new(ttl, fee)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAdversary(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidAdversary(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )))
    }
}

/// `{1: [(1, 1), (2, 1 + epsilon)]}`: Greedy takes the larger fee and loses
/// the urgent one.
pub fn greedy_lb_adversary(epsilon: f64) -> Result<TransactionSchedule> {
    check_epsilon(epsilon)?;
    Ok(TransactionSchedule::new(format!("greedy_lb:eps={epsilon}")).with(1, [tx(1, 1.0)?, tx(2, 1.0 + epsilon)?]))
}

/// Steps `1..=n` emit `(1, psi^{i-1})` and `(2, psi^i)`.
pub fn det_ub_psi_adversary(n: usize, lambda: f64) -> Result<TransactionSchedule> {
    check_lambda(lambda)?;
    let p = psi(lambda);
    let x: Vec<f64> = (0..=n).map(|i| p.powi(i as i32)).collect();
    let mut s = det_ub_general_adversary(&x, false)?;
    s.set_label(format!("det_psi:n={n}"));
    Ok(s)
}

/// Steps `1..=n` emit `(1, x[i-1])` and `(2, x[i])`, with `n = x.len() - 1`.
/// With `with_tail`, step `n + 1` adds `(1, x[n])`.
pub fn det_ub_general_adversary(x: &[f64], with_tail: bool) -> Result<TransactionSchedule> {
    if x.len() < 2 {
        return Err(Error::InvalidAdversary("need at least x_0 and x_1".into()));
    }
    if let Some(index) = x.iter().position(|&f| !(f > 0.0)) {
        return Err(Error::NonPositiveFee { index });
    }
    if x[0] != 1.0 {
        return Err(Error::InvalidAdversary(format!("x_0 must be 1, got {}", x[0])));
    }
    let n = x.len() - 1;
    let mut s = TransactionSchedule::new(format!("det_general:n={n},tail={with_tail}"));
    for i in 1..=n {
        s.extend(i, [tx(1, x[i - 1])?, tx(2, x[i])?]);
    }
    if with_tail {
        s.push(n + 1, tx(1, x[n])?);
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GoldenKind {
    A1,
    A2,
    A3,
    A4,
}

impl FromStr for GoldenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A1" => Ok(GoldenKind::A1),
            "A2" => Ok(GoldenKind::A2),
            "A3" => Ok(GoldenKind::A3),
            "A4" => Ok(GoldenKind::A4),
            _ => Err(Error::InvalidAdversary(format!("unknown golden adversary {s:?}"))),
        }
    }
}

impl fmt::Display for GoldenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversaryFamilyParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub n: usize,
    /// Last emitting step of the stationary family.
    pub truncation_horizon: usize,
}

impl AdversaryFamilyParams {
    pub fn new(lambda: f64, epsilon: f64, n: usize, truncation_horizon: usize) -> Result<Self> {
        check_lambda(lambda)?;
        check_epsilon(epsilon)?;
        if n == 0 || truncation_horizon == 0 {
            return Err(Error::InvalidAdversary(
                "n and truncation horizon must be positive".into(),
            ));
        }
        Ok(AdversaryFamilyParams {
            lambda,
            epsilon,
            n,
            truncation_horizon,
        })
    }

    /// Defaults: `epsilon = 1e-6`, `n = 1`, truncation from
    /// [`a1_truncation_horizon`] at tolerance `1e-9`.
    pub fn with_lambda(lambda: f64) -> Result<Self> {
        AdversaryFamilyParams::new(lambda, DEFAULT_EPSILON, 1, a1_truncation_horizon(lambda, 1e-9))
    }
}

/// Smallest `N` whose geometric tail `lambda^N / (1 - lambda)` is at most
/// `tol`. Returns 1 when `lambda = 0`; `lambda = 1` has no finite answer and
/// is mapped to `usize::MAX`.
pub fn a1_truncation_horizon(lambda: f64, tol: f64) -> usize {
    if lambda <= 0.0 {
        return 1;
    }
    if lambda >= 1.0 {
        return usize::MAX;
    }
    let n = ((tol * (1.0 - lambda)).ln() / lambda.ln()).ceil();
    n.max(1.0) as usize
}

/// The four schedules that pin down the immediacy-biased policy.
pub fn golden_adversary(kind: GoldenKind, params: &AdversaryFamilyParams) -> Result<TransactionSchedule> {
    let p = psi(params.lambda);
    let eps = params.epsilon;
    let mut s = TransactionSchedule::new(format!("golden:{kind}"));
    match kind {
        GoldenKind::A1 => {
            if params.truncation_horizon > 1 << 24 {
                return Err(Error::InvalidAdversary("truncation horizon too large".into()));
            }
            for i in 0..=params.truncation_horizon {
                s.extend(i, [tx(1, 1.0)?, tx(2, p - eps)?]);
            }
        }
        GoldenKind::A2 => s.extend(1, [tx(1, 1.0)?, tx(2, p + eps)?]),
        GoldenKind::A3 => {
            let n = params.n;
            let long = u32::try_from(n + 2).map_err(|_| Error::InvalidAdversary("n too large".into()))?;
            for i in 1..=n {
                s.extend(i, [tx(long, 1.0 + eps)?, tx(long - i as u32, 1.0)?]);
            }
        }
        GoldenKind::A4 => {
            s.extend(1, [tx(4, 1.0)?, tx(1, eps)?, tx(2, 1.0 - eps)?]);
            s.extend(2, [tx(2, p + eps)?, tx(1, 1.0)?]);
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Emit,
    Respond,
    Done,
}

/// Adaptive adversary against a possibly randomized policy.
///
/// Each step is two calls: [`emissions`](Self::emissions), then
/// [`respond`](Self::respond) with the policy's probability of a TTL=1 pick
/// at this step and the pick it actually made. Steps `1..=n` emit
/// `(1, b^{i-1})` and `(2, b^i)` with `b = 2 / (2 - lambda)`.
#[derive(Clone, Debug)]
pub struct AdaptiveAdversary {
    n: usize,
    lambda: f64,
    base: f64,
    step: usize,
    phase: Phase,
    terminated: bool,
    extra_tail: bool,
    current: Vec<Transaction>,
    pool: MempoolState,
    realized: TransactionSchedule,
    adversary_choices: Vec<(usize, Transaction)>,
}

impl AdaptiveAdversary {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAdversary("n must be at least 1".into()));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidAdversary(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        Ok(AdaptiveAdversary {
            n,
            lambda,
            base: 2.0 / (2.0 - lambda),
            step: 0,
            phase: Phase::Emit,
            terminated: false,
            extra_tail: false,
            current: Vec::new(),
            pool: MempoolState::empty(),
            realized: TransactionSchedule::new(format!("adaptive:n={n}")),
            adversary_choices: Vec::new(),
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn realized(&self) -> &TransactionSchedule {
        &self.realized
    }

    pub fn adversary_choices(&self) -> &[(usize, Transaction)] {
        &self.adversary_choices
    }

    fn active(&self) -> bool {
        !self.terminated && (1..=self.n).contains(&self.step)
    }

    /// Emissions of the current step.
    pub fn emissions(&mut self) -> Result<Vec<Transaction>> {
        if self.phase != Phase::Emit {
            return Err(Error::ProtocolViolation(format!(
                "emissions requested twice at step {} or after the end",
                self.step
            )));
        }
        let i = self.step;
        self.current = if self.active() {
            let low = self.base.powi(i as i32 - 1);
            vec![tx(1, low)?, tx(2, low * self.base)?]
        } else if self.extra_tail && i == self.n + 1 {
            vec![tx(1, self.base.powi(self.n as i32))?]
        } else {
            Vec::new()
        };
        self.realized.extend(i, self.current.iter().copied());
        self.phase = Phase::Respond;
        Ok(self.current.clone())
    }

    /// Records the policy's step and returns the adversary's own pick.
    pub fn respond(
        &mut self,
        urgent_probability: f64,
        policy_pick: Option<Transaction>,
    ) -> Result<Option<Transaction>> {
        if self.phase != Phase::Respond {
            return Err(Error::ProtocolViolation(format!(
                "respond called before emissions at step {}",
                self.step
            )));
        }
        if !(0.0..=1.0).contains(&urgent_probability) {
            return Err(Error::ProtocolViolation(format!(
                "urgent probability {urgent_probability} outside [0, 1]"
            )));
        }
        let available = self.pool.offer(&self.current);
        let best = |keep: &dyn Fn(&Transaction) -> bool| -> Option<usize> {
            let mut best: Option<usize> = None;
            for (k, t) in available.iter().enumerate() {
                if keep(t) && best.is_none_or(|b| t.fee() > available[b].fee()) {
                    best = Some(k);
                }
            }
            best
        };
        let policy_took_urgent = policy_pick.map(|t| t.is_urgent());
        let pick = if self.active() {
            if urgent_probability > 0.5 {
                if self.step == self.n && policy_took_urgent == Some(true) {
                    self.extra_tail = true;
                }
                best(&|t| t.ttl() == 2)
            } else {
                if policy_took_urgent == Some(false) {
                    self.terminated = true;
                }
                best(&|t| t.is_urgent())
            }
        } else {
            best(&|_| true)
        };
        let chosen = pick.map(|k| available[k]);
        self.pool = self.pool.step(&self.current, chosen.as_ref())?;
        if let Some(t) = chosen {
            self.adversary_choices.push((self.step, t));
        }
        self.step += 1;
        let emitting = self.active() || (self.extra_tail && self.step == self.n + 1);
        self.phase = if emitting || !self.pool.is_empty() {
            Phase::Emit
        } else {
            Phase::Done
        };
        Ok(chosen)
    }
}

/// One policy run against a fresh adaptive adversary.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveRun {
    pub alg_revenue: f64,
    pub adv_revenue: f64,
    pub policy_choices: Vec<(usize, Transaction)>,
    pub adversary_choices: Vec<(usize, Transaction)>,
    pub realized: TransactionSchedule,
}

pub fn run_adaptive(
    policy: &dyn Policy,
    n: usize,
    lambda: f64,
    gamma: f64,
    rng: &mut dyn RngCore,
) -> Result<AdaptiveRun> {
    let params = MinerParams::new(lambda, gamma, n + 2)?;
    let mut adversary = AdaptiveAdversary::new(n, lambda)?;
    let mut pool = MempoolState::empty();
    let mut policy_choices = Vec::new();
    while !adversary.is_done() {
        let step = adversary.step();
        let emitted = adversary.emissions()?;
        let available = pool.offer(&emitted);
        let choice = policy.choose(&available, rng);
        let index = match choice.index {
            Some(k) if k < available.len() && choice.chosen == Some(available[k]) => Some(k),
            None if available.is_empty() => None,
            _ => return Err(Error::PolicyChoseUnavailable { step }),
        };
        adversary.respond(choice.urgent_probability, choice.chosen)?;
        if let Some(k) = index {
            policy_choices.push((step, available[k]));
        }
        pool = MempoolState::carry(available, index);
    }
    Ok(AdaptiveRun {
        alg_revenue: discounted_revenue(&policy_choices, &params),
        adv_revenue: discounted_revenue(adversary.adversary_choices(), &params),
        policy_choices,
        adversary_choices: adversary.adversary_choices.clone(),
        realized: adversary.realized.clone(),
    })
}

/// Monte Carlo estimate of `E[ALG] / E[ADV]` against the adaptive adversary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveEstimate {
    pub mean_alg: f64,
    pub mean_adv: f64,
    pub ratio: f64,
    /// 99% delta-method half-width of `ratio`.
    pub ci_halfwidth: f64,
    /// `E[ALG] / E[OPT]` with the matching optimum of each realized
    /// schedule, when requested.
    pub ratio_vs_opt: Option<f64>,
    pub samples: usize,
}

/// Sample `k` uses stream `k` of `seed`.
pub fn adaptive_ratio(
    policy: &dyn Policy,
    n: usize,
    lambda: f64,
    gamma: f64,
    samples: usize,
    seed: u64,
    with_matching: bool,
) -> Result<AdaptiveEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be at least 1".into()));
    }
    let mut alg = Vec::with_capacity(samples);
    let mut adv = Vec::with_capacity(samples);
    let mut opt = Vec::new();
    for k in 0..samples {
        let run = run_adaptive(policy, n, lambda, gamma, &mut stream_rng(seed, k as u64))?;
        if with_matching {
            let params = MinerParams::new(lambda, gamma, n + 2)?;
            opt.push(opt_matching(&run.realized, &params).revenue);
        }
        alg.push(run.alg_revenue);
        adv.push(run.adv_revenue);
    }
    Ok(estimate_from(&alg, &adv, (!opt.is_empty()).then_some(opt.as_slice())))
}

pub fn estimate_from(alg: &[f64], adv: &[f64], opt: Option<&[f64]>) -> AdaptiveEstimate {
    let samples = alg.len();
    let (mean_alg, sd_alg) = mean_sd(alg);
    let (mean_adv, sd_adv) = mean_sd(adv);
    let ratio = mean_alg / mean_adv;
    let ci_halfwidth = if samples < 2 {
        0.0
    } else {
        let cov = alg
            .iter()
            .zip(adv)
            .map(|(a, d)| (a - mean_alg) * (d - mean_adv))
            .sum::<f64>()
            / (samples as f64 - 1.0);
        let var = (sd_alg * sd_alg - 2.0 * ratio * cov + ratio * ratio * sd_adv * sd_adv).max(0.0);
        Z_99 * (var / samples as f64).sqrt() / mean_adv
    };
    let ratio_vs_opt = opt.map(|o| mean_alg / (o.iter().sum::<f64>() / o.len() as f64));
    AdaptiveEstimate {
        mean_alg,
        mean_adv,
        ratio,
        ci_halfwidth,
        ratio_vs_opt,
        samples,
    }
}
