// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form competitive-ratio bounds and the equal-ratio fee solver.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// The generalized golden ratio `(lambda + sqrt(lambda^2 + 4)) / 2`.
///
/// It is the positive root of `psi^2 = 1 + lambda * psi`.
pub fn psi(lambda: f64) -> f64 {
    0.5 * (lambda + (lambda * lambda + 4.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    GreedyTight,
    DetUpper,
    RhoLower,
    RhoUpper,
    RandUpper,
    RmixLower,
}

impl BoundKind {
    pub const ALL: [BoundKind; 6] = [
        BoundKind::GreedyTight,
        BoundKind::DetUpper,
        BoundKind::RhoLower,
        BoundKind::RhoUpper,
        BoundKind::RandUpper,
        BoundKind::RmixLower,
    ];

    /// Column name in the curve CSV.
    pub fn column(self) -> &'static str {
        match self {
            BoundKind::GreedyTight => "greedy",
            BoundKind::DetUpper => "det_upper",
            BoundKind::RhoLower => "rho_lower",
            BoundKind::RhoUpper => "rho_upper",
            BoundKind::RandUpper => "rand_upper",
            BoundKind::RmixLower => "rmix_lower",
        }
    }
}

pub fn bound_value(kind: BoundKind, lambda: f64) -> f64 {
    match kind {
        BoundKind::GreedyTight => 1.0 / (1.0 + lambda),
        BoundKind::DetUpper => 1.0 / psi(lambda),
        BoundKind::RhoLower => (1.0 / psi(lambda)).min(1.0 / (1.0 + lambda.powi(3))),
        BoundKind::RhoUpper => {
            let [det, four, chain] = rho_upper_terms(lambda);
            det.min(four).min(chain)
        }
        BoundKind::RandUpper => 1.0 - lambda / 4.0,
        BoundKind::RmixLower => {
            if lambda == 0.0 {
                1.0
            } else {
                (1.0 - (-lambda).exp()) / lambda
            }
        }
    }
}

/// The three terms whose minimum is the immediacy-biased upper bound:
/// `1/psi`, the four-step term and the chain term.
pub fn rho_upper_terms(lambda: f64) -> [f64; 3] {
    let p = psi(lambda);
    let l2 = lambda * lambda;
    let four = (1.0 + lambda * p) / (1.0 + lambda + l2 * p + l2 * lambda);
    [1.0 / p, four, chain_term(lambda)]
}

/// Largest `n` examined by [`chain_term`].
pub const CHAIN_CAP: usize = 10_000;

/// `sum_{i<=n+1} lambda^i / sum_{i<=2n} lambda^i` for a single `n >= 1`.
pub fn chain_ratio(lambda: f64, n: usize) -> f64 {
    if lambda == 1.0 {
        return (n as f64 + 2.0) / (2.0 * n as f64 + 1.0);
    }
    let geometric = |k: usize| -> f64 {
        // sum_{i=0}^{k} lambda^i
        (1.0 - lambda.powi(k as i32 + 1)) / (1.0 - lambda)
    };
    geometric(n + 1) / geometric(2 * n)
}

/// `min_{n>=1}` of [`chain_ratio`], scanning upward until the ratio has
/// risen twice in a row. At `lambda = 1` the infimum `1/2` is returned.
pub fn chain_term(lambda: f64) -> f64 {
    if lambda == 1.0 {
        return 0.5;
    }
    let mut best = f64::INFINITY;
    let mut prev = f64::INFINITY;
    let mut rises = 0;
    for n in 1..=CHAIN_CAP {
        let term = chain_ratio(lambda, n);
        best = best.min(term);
        rises = if term > prev { rises + 1 } else { 0 };
        if rises == 2 {
            break;
        }
        prev = term;
    }
    best
}

/// [`chain_term`] without early exit, over `n = 1..=cap`.
pub fn chain_term_exhaustive(lambda: f64, cap: usize) -> f64 {
    (1..=cap).map(|n| chain_ratio(lambda, n)).fold(f64::INFINITY, f64::min)
}

/// Root of `psi(lambda) = 1 + lambda^3` in `(0.5, 0.9)`, the point where the
/// cubic lower bound of the immediacy-biased policy meets `1/psi`.
pub fn semi_myopic_threshold() -> f64 {
    let f = |l: f64| psi(l) - (1.0 + l * l * l);
    let (mut lo, mut hi) = (0.5, 0.9);
    let (f_lo, f_hi) = (f(lo), f(hi));
    assert!(f_lo * f_hi < 0.0, "no sign change on [0.5, 0.9]");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fees `x_0 = 1, x_1, ..., x_n` that make every deterministic response to
/// the nested two-transaction adversaries earn the same ratio `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualRatioSolution {
    pub n: usize,
    pub lambda: f64,
    pub x: Vec<f64>,
    pub v: f64,
    /// `r[i - 1] = x_i / x_{i-1}` for `i = 1..=n`.
    pub r: Vec<f64>,
    /// `increments[k - 1] = r_{k+1} - r_k`, evaluated without cancellation.
    pub increments: Vec<f64>,
    /// Largest relative defect over the recursion and terminal equations.
    pub residual: f64,
}

impl EqualRatioSolution {
    /// `x_2 - x_1^2 = x_1 (r_2 - r_1)`, free of the cancellation in the
    /// direct difference.
    pub fn x2_excess(&self) -> f64 {
        self.x[1] * self.increments[0]
    }
}

/// Bracket for `x_1`: the golden-ratio lower bound and the monotonicity
/// upper bound `(1 + 1/sqrt(lambda)) / (1 - lambda)`.
pub fn x1_bracket(lambda: f64) -> (f64, f64) {
    (psi(lambda), (1.0 + 1.0 / lambda.sqrt()) / (1.0 - lambda))
}

struct Backward {
    v: f64,
    c: f64,
    /// `r_1..=r_n`
    r: Vec<f64>,
}

/// Given `x_1`, runs the ratio recursion backward from the terminal value
/// `r_n = (1 + V) / (1 + V - lambda)`. Forward propagation loses all digits
/// within a few dozen steps; backward it contracts.
fn backward(n: usize, lambda: f64, x1: f64) -> Backward {
    let v = x1 / (1.0 + lambda * x1);
    let c = (1.0 + v) / (lambda - v * lambda * lambda);
    let mut r = vec![0.0; n];
    r[n - 1] = (1.0 + v) / (1.0 + v - lambda);
    for i in (0..n - 1).rev() {
        r[i] = 1.0 / (1.0 - r[i + 1] / c);
    }
    Backward { v, c, r }
}

fn mismatch(n: usize, lambda: f64, x1: f64) -> f64 {
    backward(n, lambda, x1).r[0] - x1
}

fn bisect(n: usize, lambda: f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_positive = mismatch(n, lambda, lo) > 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let m = mismatch(n, lambda, mid);
        if m == 0.0 {
            return mid;
        }
        if (m > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

const SCAN_POINTS: usize = 10_000;

/// Solves the equal-ratio system for `n >= 2` and `0 < lambda <= 0.999`.
pub fn solve_equal_ratio_system(n: usize, lambda: f64, tol: f64) -> Result<EqualRatioSolution> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("n must be at least 2, got {n}")));
    }
    if !(lambda > 0.0 && lambda <= 0.999) {
        return Err(Error::InvalidParams(format!(
            "lambda must lie in (0, 0.999], got {lambda}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {tol}")));
    }
    let (lo, hi) = x1_bracket(lambda);
    let (f_lo, f_hi) = (mismatch(n, lambda, lo), mismatch(n, lambda, hi));
    let x1 = if f_lo.abs() <= 1e-12 * lo {
        // The root sits on the golden-ratio bound up to rounding.
        lo
    } else if f_lo.is_finite() && f_hi.is_finite() && (f_lo > 0.0) != (f_hi > 0.0) {
        bisect(n, lambda, lo, hi)
    } else {
        scan(n, lambda, lo, hi).ok_or(Error::NoSignChange { lo, hi, f_lo, f_hi })?
    };
    let solution = assemble(n, lambda, x1);
    if !(solution.residual <= tol) {
        return Err(Error::NotConverged {
            residual: solution.residual,
            tol,
        });
    }
    for (k, &e) in solution.increments.iter().enumerate() {
        let direct = solution.r[k + 1] - solution.r[k];
        if !(e > 0.0) || direct < -tol {
            return Err(Error::NonMonotoneRatios {
                index: k + 1,
                prev: solution.r[k],
                next: solution.r[k + 1],
            });
        }
    }
    Ok(solution)
}

/// Grid search for a bracketed sign change when the end points agree in sign.
fn scan(n: usize, lambda: f64, lo: f64, hi: f64) -> Option<f64> {
    let at = |k: usize| lo + (hi - lo) * k as f64 / SCAN_POINTS as f64;
    let mut prev = (at(0), mismatch(n, lambda, at(0)));
    for k in 1..=SCAN_POINTS {
        let cur = (at(k), mismatch(n, lambda, at(k)));
        if prev.1.is_finite() && cur.1.is_finite() && (prev.1 > 0.0) != (cur.1 > 0.0) {
            let root = bisect(n, lambda, prev.0, cur.0);
            if mismatch(n, lambda, root).abs() <= 1e-9 * root {
                return Some(root);
            }
        }
        prev = cur;
    }
    None
}

fn assemble(n: usize, lambda: f64, x1: f64) -> EqualRatioSolution {
    let Backward { v, c, mut r } = backward(n, lambda, x1);
    r[0] = x1;

    // r_{k-1} - r_{k-2} = (r_k - r_{k-1}) * r_{k-1} * r_{k-2} / c, so the
    // increments follow from the last one without subtracting close values.
    let mut increments = vec![0.0; n - 1];
    increments[n - 2] = r[n - 1] - r[n - 2];
    for k in (1..n - 1).rev() {
        increments[k - 1] = increments[k] * r[k] * r[k - 1] / c;
    }

    let mut x = Vec::with_capacity(n + 1);
    x.push(1.0);
    for i in 1..=n {
        x.push(x[i - 1] * r[i - 1]);
    }

    let mut residual: f64 = 0.0;
    for i in 1..n {
        let predicted = c * (x[i] - x[i - 1]);
        residual = residual.max(((x[i + 1] - predicted) / x[i + 1]).abs());
    }
    let terminal = (1.0 + v) * x[n - 1] / (1.0 + v - lambda);
    residual = residual.max(((x[n] - terminal) / x[n]).abs());

    EqualRatioSolution {
        n,
        lambda,
        x,
        v,
        r,
        increments,
        residual,
    }
}

/// The `n + 1` ratios a deterministic policy can reach against the nested
/// family with fees `x`: first TTL=2 pick at `k = 1..=n`, then never.
pub fn equal_ratio_expressions(x: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len() - 1;
    let pow = |i: usize| lambda.powi(i as i32);
    let mut out = Vec::with_capacity(n + 1);
    let (mut alg_prefix, mut opt_prefix) = (0.0, 0.0);
    for k in 1..=n {
        let alg = alg_prefix + pow(k) * x[k];
        let opt = opt_prefix + pow(k) * x[k - 1] + pow(k + 1) * x[k];
        out.push(alg / opt);
        alg_prefix += pow(k) * x[k - 1];
        opt_prefix += pow(k) * x[k];
    }
    out.push((alg_prefix + pow(n + 1) * x[n]) / (opt_prefix + pow(n + 1) * x[n]));
    out
}

/// One row of the bound figure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub lambda: f64,
    pub values: [f64; 6],
}

impl BoundRow {
    pub fn get(&self, kind: BoundKind) -> f64 {
        let i = BoundKind::ALL.iter().position(|&k| k == kind).expect("listed");
        self.values[i]
    }
}

pub fn emit_bound_curves(lambda_grid: &[f64]) -> Result<Vec<BoundRow>> {
    lambda_grid
        .iter()
        .map(|&lambda| {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::InvalidParams(format!("grid value {lambda} outside [0, 1]")));
            }
            Ok(BoundRow {
                lambda,
                values: BoundKind::ALL.map(|k| bound_value(k, lambda)),
            })
        })
        .collect()
}

pub const BOUNDS_HEADER: &str = "lambda,greedy,det_upper,rho_lower,rho_upper,rand_upper,rmix_lower";

/// CSV with shortest round-trip float formatting.
pub fn bound_curves_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for row in rows {
        write!(out, "{}", row.lambda).unwrap();
        for v in row.values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses `a:b:step` into `a, a + step, ..., b`.
///
/// When `step` divides the range the points are `a + (b - a) k / count`, so
/// the last one is exactly `b`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::Parse(format!("grid {text:?} is not a:b:step")));
    };
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse(format!("grid bound {s:?} is not a number")))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !(step > 0.0) || b < a {
        return Err(Error::Parse(format!("grid {text:?} needs a <= b and step > 0")));
    }
    let span = (b - a) / step;
    let count = span.round();
    if count > 1e7 {
        return Err(Error::Parse(format!("grid {text:?} has too many points")));
    }
    if (span - count).abs() <= 1e-9 * span.max(1.0) {
        let count = count as usize;
        if count == 0 {
            return Ok(vec![a]);
        }
        return Ok((0..=count).map(|k| a + (b - a) * k as f64 / count as f64).collect());
    }
    let count = span.floor() as usize;
    Ok((0..=count).map(|k| a + step * k as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        assert!((psi(1.0) - 1.618_033_988_749_895).abs() < 1e-12);
        assert!((1.0 / psi(1.0) - 0.618_033_988_7).abs() < 1e-10);
        assert_eq!(psi(0.0), 1.0);
        let p = psi(0.5);
        assert!((p * p - 0.5 * p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_value_examples() {
        assert!((bound_value(BoundKind::RmixLower, 1.0) - 0.632_120_558_828_557_7).abs() < 1e-9);
        assert_eq!(bound_value(BoundKind::GreedyTight, 1.0), 0.5);
        assert_eq!(bound_value(BoundKind::RandUpper, 0.0), 1.0);
        assert!((bound_value(BoundKind::DetUpper, 1.0) - 0.618_033_988_7).abs() < 1e-10);
        for kind in BoundKind::ALL {
            assert_eq!(bound_value(kind, 0.0), 1.0, "{kind:?}");
        }
    }

    #[test]
    fn chain_term_limits() {
        assert_eq!(chain_term(1.0), 0.5);
        assert_eq!(chain_ratio(1.0, 1), 1.0);
        // Near lambda = 1 the minimum lies at large n.
        let near = chain_term(0.99);
        assert!(near < chain_ratio(0.99, 1));
        assert_eq!(near, chain_term_exhaustive(0.99, 2 * CHAIN_CAP));
    }

    #[test]
    fn threshold_triple_equality() {
        let t = semi_myopic_threshold();
        assert!((t - 0.770_018).abs() < 1e-5);
        assert!((psi(t) - (1.0 + t.powi(3))).abs() < 1e-9);
        let [det, four, _] = rho_upper_terms(t);
        let cubic = 1.0 / (1.0 + t.powi(3));
        assert!((det - cubic).abs() < 1e-6);
        assert!((det - four).abs() < 1e-6);
        let below = t - 0.01;
        let [det, four, chain] = rho_upper_terms(below);
        assert!(det < four.min(chain));
    }

    /// Independent check of the `x_2` relation: equate the first two ratio
    /// expressions and solve for `x_2`.
    fn x2_from_first_two_ratios(x1: f64, lambda: f64) -> f64 {
        ((1.0 + lambda) * x1 * x1 - lambda * x1 - 1.0) / lambda
    }

    #[test]
    fn n2_closed_form() {
        let lambda = 0.5;
        let s = solve_equal_ratio_system(2, lambda, 1e-8).unwrap();
        let x1 = s.x[1];
        let v = x1 / (1.0 + lambda * x1);
        let recursion = (1.0 + v) * (x1 - 1.0) / (lambda - v * lambda * lambda);
        assert!((s.x[2] - recursion).abs() < 1e-9);
        assert!((s.x[2] - x2_from_first_two_ratios(x1, lambda)).abs() < 1e-9);
    }

    #[test]
    fn certificate_and_shape() {
        for &lambda in &[0.1, 0.3, 0.5, 0.75, 0.9, 0.999] {
            for &n in &[2usize, 3, 5, 10, 20, 40] {
                let s =
                    solve_equal_ratio_system(n, lambda, 1e-8).unwrap_or_else(|e| panic!("lambda {lambda} n {n}: {e}"));
                assert!(s.x2_excess() > 0.0);
                assert!(s.x[2] >= s.x[1] * s.x[1]);
                assert!(s.v >= 1.0 / psi(lambda) - 1e-8);
                for e in equal_ratio_expressions(&s.x, lambda) {
                    assert!((e - s.v).abs() <= 1e-8 * s.v, "lambda {lambda} n {n}: {e} vs {}", s.v);
                }
            }
        }
    }

    #[test]
    fn converges_towards_inverse_psi() {
        let target = 1.0 / psi(0.5);
        let gaps: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&n| solve_equal_ratio_system(n, 0.5, 1e-8).unwrap().v - target)
            .collect();
        assert!(gaps[2] < 1e-3);
        assert!(gaps[0] >= gaps[1] && gaps[1] >= gaps[2] - 1e-15);
    }

    #[test]
    fn solver_rejects_bad_input() {
        assert!(solve_equal_ratio_system(1, 0.5, 1e-8).is_err());
        assert!(solve_equal_ratio_system(5, 0.0, 1e-8).is_err());
        assert!(solve_equal_ratio_system(5, 1.0, 1e-8).is_err());
        assert!(solve_equal_ratio_system(5, 0.5, 0.0).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:1:0.01").unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert_eq!(g[50], 0.5);
        assert_eq!(parse_grid("0.3:0.3:0.1").unwrap(), vec![0.3]);
        assert_eq!(parse_grid("0:1:0.3").unwrap().len(), 4);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = emit_bound_curves(&[0.0, 1.0]).unwrap();
        let csv = bound_curves_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], BOUNDS_HEADER);
        assert_eq!(lines[1], "0,1,1,1,1,1,1");
        assert!(lines[2].ends_with(",0.6321205588285577"));
        assert!(emit_bound_curves(&[1.5]).is_err());
    }
}
