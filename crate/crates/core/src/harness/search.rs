//! Adversarial slack minimization.
//!
//! For fixed `lambda` and parameters every inequality is a real quadratic
//! form in the diagonal slice `w = (t[i][p][p])_p`, so the worst `t` is the
//! eigenvector of the smallest eigenvalue of that form. Multi-start
//! Nelder-Mead then searches the spectrum over a parameterization of the
//! inequality's precondition set.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{EstimateParams, ThirdOrderData};
use super::lemmas::{
    corollary17_lhs, corollary17_slack, is_m_admissible, k_threshold, lemma1_sides, lemma1_slack, lemma2_sides,
    lemma2_slack, lemma3_slack, Inequality,
};
use super::report::{tolerance_scale, SlackReport, SEARCH_TOL};
use super::terms::TermContext;
use crate::cone::in_cone_values;
use crate::error::{Error, Result};
use crate::linalg::min_eigenpair;
use crate::rng;
use crate::symfun::{elementary, jet, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub k: usize,
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    pub seed: u64,
    pub params: EstimateParams,
}

impl SearchConfig {
    pub fn new(n: usize, k: usize, restarts: usize, seed: u64, params: EstimateParams) -> Self {
        Self {
            n,
            k,
            restarts,
            max_evals: 800,
            seed,
            params,
        }
    }

    fn validate(&self, inequality: Inequality) -> Result<()> {
        if !(self.n >= 2 && 2 <= self.k && self.k <= self.n) {
            return Err(Error::Config(format!("need 2 <= k <= n, got n = {}, k = {}", self.n, self.k)));
        }
        if self.restarts == 0 || self.max_evals == 0 {
            return Err(Error::Config("restarts and max_evals must be positive".into()));
        }
        self.params.validate(self.k).map_err(|e| Error::Config(e.to_string()))?;
        if matches!(inequality, Inequality::GenesisI | Inequality::Genesis2 | Inequality::Lemma3)
            && !is_m_admissible(self.params.m)
        {
            return Err(Error::Config(format!("m = {} not admissible", self.params.m)));
        }
        Ok(())
    }
}

/// Derivative-free minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
/// values count as `+inf`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for j in 0..d {
        let mut x = x0.to_vec();
        x[j] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evals = d + 1;
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        if spread.abs() <= 1e-15 * (1.0 + simplex[0].1.abs()) && simplex[0].1.is_finite() {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = eval(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = eval(&expanded);
            evals += 1;
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let (toward, ft) = if fr < simplex[d].1 {
                (reflected.clone(), fr)
            } else {
                (worst.clone(), simplex[d].1)
            };
            let contracted = lerp(&centroid, &toward, 0.5);
            let fc = eval(&contracted);
            evals += 1;
            if fc < ft {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    let v = eval(&x);
                    *entry = (x, v);
                }
                evals += d;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Matrix of a real quadratic form on `R^n` recovered by polarization.
fn polarize(n: usize, f: impl Fn(&[Complex64]) -> f64) -> Vec<f64> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut e = vec![zero; n];
    let mut diag = vec![0.0; n];
    for p in 0..n {
        e[p] = one;
        diag[p] = f(&e);
        e[p] = zero;
    }
    let mut q = vec![0.0; n * n];
    for p in 0..n {
        q[p * n + p] = diag[p];
        for r in (p + 1)..n {
            e[p] = one;
            e[r] = one;
            let v = 0.5 * (f(&e) - diag[p] - diag[r]);
            e[p] = zero;
            e[r] = zero;
            q[p * n + r] = v;
            q[r * n + p] = v;
        }
    }
    q
}

/// A concrete point of the precondition set.
#[derive(Debug, Clone)]
struct Point {
    lambda: Spectrum,
    params: EstimateParams,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Smallest `s` (up to bisection resolution) with `v + s 1` in `Gamma_k`,
/// returned from the inside.
fn cone_entry_shift(v: &[f64], k: usize) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-max - 1.0, -min + 1.0);
    let shifted = |s: f64| v.iter().map(|x| x + s).collect::<Vec<_>>();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if in_cone_values(&shifted(mid), k) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn decode(inequality: Inequality, config: &SearchConfig, x: &[f64]) -> Option<Point> {
    let (n, k) = (config.n, config.k);
    let base = &config.params;
    let lambda = match inequality {
        Inequality::Lemma1 | Inequality::Corollary17 => {
            let v = &x[..n];
            let vmax = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let gap = x[n].clamp(-30.0, 5.0).exp() * (1.0 + vmax);
            let s = cone_entry_shift(v, k) + gap;
            let raw: Vec<f64> = v.iter().map(|a| a + s).collect();
            let norm = raw.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            raw.iter().map(|a| a / norm).collect()
        }
        Inequality::GenesisI | Inequality::Genesis2 => {
            let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            x.iter().map(|a| (a - top).max(-40.0).exp()).collect()
        }
        Inequality::Lemma3 => {
            let mut l = vec![1.0];
            for (j, a) in x.iter().enumerate() {
                let s = sigmoid(*a).max(1e-12);
                l.push(if j + 1 < base.mu {
                    base.delta + (1.0 - base.delta) * s
                } else {
                    base.delta_prime * s
                });
            }
            l
        }
    };
    if lambda.iter().any(|v| !v.is_finite()) || !in_cone_values(&lambda, k) {
        return None;
    }
    let lambda = Spectrum::new(lambda).ok()?;
    let mut params = base.clone();
    if matches!(inequality, Inequality::Corollary17 | Inequality::Lemma3) {
        let psi = elementary(lambda.values(), k as isize);
        params.psi_inf = psi;
        params.big_k = k_threshold(k, params.delta, psi) * (1.0 + 1e-9);
    }
    Some(Point { lambda, params })
}

fn dimension(inequality: Inequality, n: usize) -> usize {
    match inequality {
        Inequality::Lemma1 | Inequality::Corollary17 => n + 1,
        Inequality::GenesisI | Inequality::Genesis2 => n,
        Inequality::Lemma3 => n - 1,
    }
}

fn indices(inequality: Inequality, n: usize) -> std::ops::Range<usize> {
    match inequality {
        Inequality::GenesisI => 1..n,
        _ => 0..1,
    }
}

/// Smallest normalized slack over unit `w` at `point`, with the index and
/// direction attaining it.
fn worst_direction(inequality: Inequality, k: usize, point: &Point) -> Option<(f64, usize, Vec<f64>)> {
    let n = point.lambda.n();
    let p = &point.params;
    let lmax = point.lambda.max_abs();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for i in indices(inequality, n) {
        let q = match inequality {
            Inequality::Lemma1 => {
                let jk = jet(&point.lambda, k).ok()?;
                let jl = jet(&point.lambda, p.ell).ok()?;
                polarize(n, |w| {
                    let (l, r) = lemma1_sides(&jk, &jl, p.delta, w);
                    l - r
                })
            }
            Inequality::Corollary17 => {
                let jk = jet(&point.lambda, k).ok()?;
                polarize(n, |w| corollary17_lhs(&jk, p.big_k, w))
            }
            Inequality::GenesisI | Inequality::Genesis2 => {
                let ctx = TermContext::new(&point.lambda, k, p.m).ok()?;
                polarize(n, |w| {
                    let (l, r) = lemma2_sides(&ctx, w, i);
                    l - r
                })
            }
            Inequality::Lemma3 => {
                let ctx = TermContext::new(&point.lambda, k, p.m).ok()?;
                polarize(n, |w| ctx.terms(w, p.big_k, 0).abcde())
            }
        };
        let (e, v) = min_eigenpair(&q, n);
        let vmax = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let normalized = e / tolerance_scale(lmax, k, vmax);
        if !normalized.is_finite() {
            return None;
        }
        if best.as_ref().map_or(true, |b| normalized < b.0) {
            best = Some((normalized, i, v));
        }
    }
    best
}

fn evaluate(inequality: Inequality, k: usize, point: &Point, i: usize, w: &[f64]) -> Result<SlackReport> {
    let n = point.lambda.n();
    let w: Vec<Complex64> = w.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let data = ThirdOrderData::from_diagonal_slice(n, i, &w);
    let p = &point.params;
    match inequality {
        Inequality::Lemma1 => lemma1_slack(&point.lambda, k, p.ell, p.delta, i, &data),
        Inequality::Corollary17 => corollary17_slack(&point.lambda, k, p.big_k, i, &data, p.psi_inf, p.delta),
        Inequality::GenesisI | Inequality::Genesis2 => lemma2_slack(&point.lambda, k, &data, p, i),
        Inequality::Lemma3 => lemma3_slack(&point.lambda, k, &data, p),
    }
}

/// Worst case over the third-order data at a fixed spectrum: the data is
/// concentrated on the diagonal slice along the minimizing unit direction
/// (over all admissible `i` for the genesis-i estimate). `params` is used
/// as given, so `psi_inf` and `K` must already satisfy the preconditions.
pub fn worst_case_at(inequality: Inequality, k: usize, lambda: &Spectrum, params: &EstimateParams) -> Result<SlackReport> {
    let point = Point {
        lambda: lambda.clone(),
        params: params.clone(),
    };
    let (_, i, w) = worst_direction(inequality, k, &point)
        .ok_or_else(|| Error::precondition(format!("{inequality} is not defined at {:?}", lambda.values())))?;
    evaluate(inequality, k, &point, i, &w)
}

/// Worst slack found over `config.restarts` independent Nelder-Mead runs.
/// Deterministic given `config.seed`; restarts run in parallel and the
/// minimum is taken with ties broken by restart index.
pub fn adversarial_search(inequality: Inequality, config: &SearchConfig) -> Result<SlackReport> {
    config.validate(inequality)?;
    let (n, k) = (config.n, config.k);
    let d = dimension(inequality, n);
    let objective = |x: &[f64]| {
        decode(inequality, config, x)
            .and_then(|pt| worst_direction(inequality, k, &pt))
            .map_or(f64::INFINITY, |b| b.0)
    };
    let runs: Vec<(usize, Vec<f64>, f64)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(rng::child_seed(config.seed, 2), r as u64);
            let x0: Vec<f64> = (0..d).map(|_| 1.5 * rng::normal(&mut g) + 0.1 * g.gen::<f64>()).collect();
            let (x, v) = nelder_mead(objective, &x0, 1.0, config.max_evals);
            (r, x, v)
        })
        .collect();
    let (restart, x, _) = runs
        .into_iter()
        .filter(|r| r.2.is_finite())
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Sampling(format!("no restart of the {inequality} search reached a feasible point")))?;
    let point = decode(inequality, config, &x).expect("feasible optimum");
    let (_, i, w) = worst_direction(inequality, k, &point).expect("finite optimum");
    let mut rep = evaluate(inequality, k, &point, i, &w)?.with_sample(config.seed, restart as u64);
    rep.worst = true;
    Ok(rep)
}

/// Empirical `delta'` threshold for the pinched-gap estimate at fixed
/// `(n, k, mu, delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPrimeThreshold {
    pub n: usize,
    pub k: usize,
    pub mu: usize,
    pub delta: f64,
    /// Largest tested `delta'` at which the search found no violation.
    pub holds_up_to: Option<f64>,
    /// Smallest tested `delta'` at which the search found a violation.
    pub fails_from: Option<f64>,
    pub worst_failure: Option<SlackReport>,
}

/// Log-bisection on `delta'` in `[lo, hi]`: each probe runs
/// [`adversarial_search`] for the pinched-gap estimate with tolerance
/// [`SEARCH_TOL`].
pub fn delta_prime_threshold(config: &SearchConfig, lo: f64, hi: f64, iterations: usize) -> Result<DeltaPrimeThreshold> {
    if !(0.0 < lo && lo < hi && hi <= 1.0) {
        return Err(Error::Config(format!("need 0 < lo < hi <= 1, got [{lo}, {hi}]")));
    }
    let probe = |dp: f64| {
        let mut c = config.clone();
        c.params.delta_prime = dp;
        adversarial_search(Inequality::Lemma3, &c)
    };
    let mut out = DeltaPrimeThreshold {
        n: config.n,
        k: config.k,
        mu: config.params.mu,
        delta: config.params.delta,
        holds_up_to: None,
        fails_from: None,
        worst_failure: None,
    };
    let top = probe(hi)?;
    if top.passes(SEARCH_TOL) {
        out.holds_up_to = Some(hi);
        return Ok(out);
    }
    out.fails_from = Some(hi);
    out.worst_failure = Some(top);
    let bottom = probe(lo)?;
    if !bottom.passes(SEARCH_TOL) {
        out.fails_from = Some(lo);
        out.worst_failure = Some(bottom);
        return Ok(out);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iterations {
        let mid = (a * b).sqrt();
        let rep = probe(mid)?;
        if rep.passes(SEARCH_TOL) {
            a = mid;
        } else {
            b = mid;
            out.worst_failure = Some(rep);
        }
    }
    out.holds_up_to = Some(a);
    out.fails_from = Some(b);
    Ok(out)
}
