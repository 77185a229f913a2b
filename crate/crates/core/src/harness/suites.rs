//! Named verification suites with a common summary shape.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{EstimateParams, ThirdOrderData};
use super::lemmas::Inequality;
use super::report::{SlackReport, SAMPLE_TOL, SEARCH_TOL};
use super::search::{adversarial_search, SearchConfig};
use super::subchecks::{
    lemma3_subchecks, newton_maclaurin_pq, pinching_cascade, CascadeDiagnosis, F_PQ_MAX, F_PQ_MIN,
    LEFTOVER_RATIO_MIN, MU_MINUS_1_CONSTANT,
};
use super::sweep::{pinched_spectrum, sweep, SweepConfig};
use crate::cone::{sample_indexed, ConeSampleConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::symfun::{elementary, elementary_excluding, jet, Spectrum};

/// Relative tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance of the Newton-MacLaurin check, in units of `(1 + |lambda|_inf)^{2 mu - 2}`.
pub const NEWTON_MACLAURIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Lemma1,
    Corollary17,
    Lemma2,
    Lemma3,
    Subchecks,
    Cascade,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Identities,
        Suite::Lemma1,
        Suite::Corollary17,
        Suite::Lemma2,
        Suite::Lemma3,
        Suite::Subchecks,
        Suite::Cascade,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Lemma1 => "lemma1",
            Suite::Corollary17 => "corollary17",
            Suite::Lemma2 => "lemma2",
            Suite::Lemma3 => "lemma3",
            Suite::Subchecks => "subchecks",
            Suite::Cascade => "cascade",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// Summary written for CI gating. Contains no timing data, so identical
/// inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub samples: u64,
    /// Smallest normalized slack (`slack / scale`).
    pub min_slack: f64,
    pub worst_sample_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub summary: SuiteSummary,
    pub tolerance: f64,
    pub violation_count: u64,
    /// Violations followed by the worst record of every configuration run.
    pub reports: Vec<SlackReport>,
    /// Measured constants (subchecks suite only).
    pub measurements: BTreeMap<String, f64>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.summary.min_slack >= -self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    /// Dimension; `None` lets identity and subcheck suites cycle through `2..=6`.
    pub n: Option<usize>,
    pub k: Option<usize>,
    /// Pinching index; `None` runs every `mu` in `1..k`.
    pub mu: Option<usize>,
    pub samples: u64,
    pub seed: u64,
    pub params: EstimateParams,
    /// Adversarial search with this many restarts instead of random sampling.
    pub search_restarts: Option<usize>,
}

impl SuiteConfig {
    pub fn new(suite: Suite, samples: u64, seed: u64) -> Self {
        Self {
            suite,
            n: None,
            k: None,
            mu: None,
            samples,
            seed,
            params: EstimateParams::default(),
            search_restarts: None,
        }
    }
}

struct Worst {
    report: SlackReport,
}

fn pick(a: Option<Worst>, b: Option<Worst>) -> Option<Worst> {
    match (a, b) {
        (Some(a), Some(b)) => {
            let ka = (a.report.normalized(), a.report.sample_id);
            let kb = (b.report.normalized(), b.report.sample_id);
            Some(if kb < ka { b } else { a })
        }
        (a, b) => a.or(b),
    }
}

fn outcome(suite: Suite, samples: u64, tolerance: f64, mut worst: SlackReport, mut violations: Vec<SlackReport>) -> SuiteOutcome {
    worst.worst = true;
    let summary = SuiteSummary {
        suite: suite.name().to_string(),
        samples,
        min_slack: worst.normalized(),
        worst_sample_id: worst.sample_id,
    };
    let count = violations.len() as u64;
    violations.push(worst);
    SuiteOutcome {
        summary,
        tolerance,
        violation_count: count,
        reports: violations,
        measurements: BTreeMap::new(),
    }
}

/// Record for a scalar check: `slack = -|lhs - rhs|` and `scale = magnitude`,
/// so the normalized slack is minus the relative error.
fn scalar_report(name: &str, lhs: f64, rhs: f64, magnitude: f64, k: usize, lambda: &[f64], seed: u64, id: u64) -> SlackReport {
    let mut r = SlackReport::new(name, lhs, rhs, EstimateParams::default(), k, None, lambda, &ThirdOrderData::zeros(lambda.len()));
    r.slack = -(lhs - rhs).abs();
    r.scale = magnitude.max(f64::MIN_POSITIVE);
    r.with_sample(seed, id)
}

/// Runs every exact identity for one random `lambda` and all `k`, returning the worst.
fn identity_sample(n: usize, seed: u64, draw: u64) -> Result<SlackReport> {
    let mut r = rng::stream(seed, draw);
    let mut v: Vec<f64> = (0..n).map(|_| 2.0 * rng::normal(&mut r)).collect();
    if draw % 5 == 0 {
        v[n - 1] = v[0];
    }
    let lambda = Spectrum::new(v)?;
    let l = lambda.values();
    // |lambda| in the same order as lambda, so index p means the same entry.
    let a: Vec<f64> = l.iter().map(|x| x.abs()).collect();
    let a = a.as_slice();
    // (relative error, name, lhs, rhs, magnitude, k); the report is built once.
    let mut worst: Option<(f64, &str, f64, f64, f64, usize)> = None;
    let mut consider = |name: &'static str, lhs: f64, rhs: f64, mag: f64, k: usize| {
        let mag = mag.max(f64::MIN_POSITIVE);
        let rel = (lhs - rhs).abs() / mag;
        if worst.map_or(true, |w| rel > w.0) {
            worst = Some((rel, name, lhs, rhs, mag, k));
        }
    };
    for k in 1..=n {
        let j = jet(&lambda, k)?;
        let kf = k as f64;
        let km1 = k as isize - 1;
        let abs_grad = |p: usize| elementary_excluding(a, km1, &[p]);
        let abs_hess = |p: usize, i: usize| elementary_excluding(a, km1 - 1, &[p, i]);
        let euler: f64 = l.iter().zip(&j.grad).map(|(x, g)| x * g).sum();
        consider("euler", euler, kf * j.value, 2.0 * kf * elementary(a, k as isize), k);
        let trace_rhs = (n - k + 1) as f64 * elementary(l, km1);
        let trace_mag = 2.0 * (n - k + 1) as f64 * elementary(a, km1);
        consider("trace", j.trace(), trace_rhs, trace_mag, k);
        for i in 0..n {
            for p in (0..n).filter(|&p| p != i) {
                let lhs = elementary_excluding(l, km1, &[i]);
                let ex = elementary_excluding(l, km1, &[i, p]);
                let ex2 = elementary_excluding(l, km1 - 1, &[i, p]);
                let mag = 2.0 * elementary_excluding(a, km1, &[i]);
                consider("exclusion", lhs, ex + l[p] * ex2, mag, k);
                let form_lhs = l[p] * j.hess_diag[p][i] + j.grad[p];
                let form_rhs = j.grad[i] - ex + j.grad[p];
                let form_mag = 2.0 * (a[p] * abs_hess(p, i) + abs_grad(p) + abs_grad(i));
                consider("exclusion_expanded_form", form_lhs, form_rhs, form_mag, k);
                let dd_lhs = j.grad[p] - j.grad[i];
                let dd_rhs = j.quotient[p][i] * (l[p] - l[i]);
                let dd_mag = abs_grad(p) + abs_grad(i) + abs_hess(p, i) * (a[p] + a[i]);
                consider("divided_difference", dd_lhs, dd_rhs, dd_mag, k);
                let exact = if j.quotient[p][i] == -j.hess_diag[p][i] { 0.0 } else { 1.0 };
                consider("quotient_closed_form", exact, 0.0, 1.0, k);
            }
        }
    }
    let (_, name, lhs, rhs, mag, k) = worst.expect("n >= 2 gives at least one identity");
    Ok(scalar_report(name, lhs, rhs, mag, k, l, seed, draw))
}

fn dims(config: &SuiteConfig, draw: u64) -> usize {
    config.n.unwrap_or(2 + (draw % 5) as usize)
}

fn identities(config: &SuiteConfig) -> Result<SuiteOutcome> {
    let worst = (0..config.samples)
        .into_par_iter()
        .map(|d| identity_sample(dims(config, d), config.seed, d).map(|r| Some(Worst { report: r })))
        .try_reduce(|| None, |a, b| Ok(pick(a, b)))?
        .ok_or_else(|| Error::Config("suite needs at least one sample".into()))?;
    let worst = worst.report;
    let bad = if worst.passes(IDENTITY_TOL) { vec![] } else { vec![worst.clone()] };
    Ok(outcome(Suite::Identities, config.samples, IDENTITY_TOL, worst, bad))
}

/// Newton-MacLaurin at all `p != q` for one `Gamma_mu` sample.
fn newton_maclaurin_sample(n: usize, mu: usize, seed: u64, draw: u64) -> Result<SlackReport> {
    let mut cone = ConeSampleConfig::new(n, mu, 1.0, seed);
    if draw % 2 == 1 {
        cone = cone.boundary_biased();
    }
    let lambda = sample_indexed(&cone, draw)?;
    let l = lambda.values();
    let mut min = f64::INFINITY;
    for p in 0..n {
        for q in (0..n).filter(|&q| q != p) {
            min = min.min(newton_maclaurin_pq(l, mu, p, q));
        }
    }
    let scale = (1.0 + lambda.max_abs()).powi(2 * mu as i32 - 2);
    let mut r = SlackReport::new("newton_maclaurin", min, 0.0, EstimateParams { mu, ..Default::default() }, mu, None, l, &ThirdOrderData::zeros(n));
    r.scale = scale;
    Ok(r.with_sample(seed, draw))
}

/// Even draws: Newton-MacLaurin on `Gamma_mu` samples, `mu` in `{2, 3}`.
/// Odd draws: the pinched-gap constants on a pinched spectrum.
fn subchecks(config: &SuiteConfig) -> Result<SuiteOutcome> {
    let delta = config.params.delta;
    let delta_prime = config.params.delta_prime;
    let results: Vec<(SlackReport, BTreeMap<String, f64>)> = (0..config.samples)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::stream(rng::child_seed(config.seed, 3), d);
            if d % 2 == 0 {
                let mu = config.mu.filter(|&m| m >= 2).unwrap_or(2 + ((d / 2) % 2) as usize);
                let n = config.n.unwrap_or(mu + 1 + ((d / 4) % 3) as usize).max(mu);
                return Ok((newton_maclaurin_sample(n, mu, config.seed, d)?, BTreeMap::new()));
            }
            let k = config.k.unwrap_or(2 + r.gen_range(0..3));
            let n = config.n.unwrap_or(k + r.gen_range(0..3)).max(k);
            let mu = config.mu.unwrap_or(r.gen_range(1..k));
            let lambda = pinched_spectrum(n, mu, delta, delta_prime, &mut r)?;
            let m = lemma3_subchecks(&lambda, k, mu)?;
            let l = lambda.values();
            let params = EstimateParams { mu, delta, delta_prime, ..Default::default() };
            let zeros = ThirdOrderData::zeros(n);
            let rep = if mu == 1 {
                let dev = (m[F_PQ_MIN] - 1.0).abs().max((m[F_PQ_MAX] - 1.0).abs());
                let mut rep = SlackReport::new("f_pq_mu1", 1.0 - dev, 1.0, params, k, None, l, &zeros);
                rep.scale = 1.0;
                rep
            } else {
                let mut rep = SlackReport::new("f_pq_nonnegative", m[F_PQ_MIN], 0.0, params, k, None, l, &zeros);
                rep.scale = (1.0 + lambda.max_abs()).powi(2 * mu as i32 - 2);
                rep
            };
            Ok((rep.with_sample(config.seed, d), m))
        })
        .collect::<Result<_>>()?;
    let mut measurements = BTreeMap::new();
    for (_, m) in &results {
        if let Some(&c) = m.get(MU_MINUS_1_CONSTANT) {
            let e = measurements.entry(format!("{MU_MINUS_1_CONSTANT}_max")).or_insert(0.0f64);
            *e = e.max(c);
        }
        if let Some(&c) = m.get(LEFTOVER_RATIO_MIN) {
            let e = measurements.entry(LEFTOVER_RATIO_MIN.to_string()).or_insert(f64::INFINITY);
            *e = e.min(c);
        }
    }
    let tol = NEWTON_MACLAURIN_TOL;
    let mut reports: Vec<SlackReport> = results.into_iter().map(|(r, _)| r).collect();
    let worst = reports
        .iter()
        .min_by(|a, b| a.normalized().total_cmp(&b.normalized()).then(a.sample_id.cmp(&b.sample_id)))
        .cloned()
        .ok_or_else(|| Error::Config("suite needs at least one sample".into()))?;
    reports.retain(|r| !r.passes(tol));
    let mut out = outcome(Suite::Subchecks, config.samples, tol, worst, reports);
    out.measurements = measurements;
    Ok(out)
}

/// Checks the case analysis on positive spectra with `delta_j = 2^{1-j}`
/// and `sigma_bound = sigma_k`. Half the draws have `lambda_1 >= 1`, where
/// the linear bound applies; the root bound is checked everywhere.
fn cascade(config: &SuiteConfig) -> Result<SuiteOutcome> {
    let results: Vec<SlackReport> = (0..config.samples)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::stream(rng::child_seed(config.seed, 4), d);
            let k = config.k.unwrap_or(2 + r.gen_range(0..3));
            let n = config.n.unwrap_or(k + r.gen_range(0..3)).max(k);
            let size = if d % 2 == 0 { (6.0 * r.gen::<f64>()).exp() } else { 1.0 };
            let l: Vec<f64> = (0..n).map(|_| size * (-4.0 * r.gen::<f64>()).exp()).collect();
            let lambda = Spectrum::new(l)?;
            let l = lambda.values();
            let deltas: Vec<f64> = (2..=k).map(|j| 0.5f64.powi(j as i32 - 1)).collect();
            let sk = elementary(l, k as isize);
            let (name, lhs, rhs) = match pinching_cascade(&lambda, k, sk, &deltas)? {
                CascadeDiagnosis::AllPinched {
                    lambda1_bound,
                    lambda1_root_bound,
                    ..
                } => {
                    let bound = if l[0] >= 1.0 { lambda1_bound.min(lambda1_root_bound) } else { lambda1_root_bound };
                    ("cascade_bound", bound * (1.0 + 1e-14), l[0])
                }
                CascadeDiagnosis::Gap { j, mu } => {
                    let prev = if j == 2 { 1.0 } else { deltas[j - 3] };
                    let ok = mu == j - 1 && l[j - 2] >= prev * l[0] && l[j - 1] < deltas[j - 2] * l[0];
                    ("cascade_gap", if ok { 0.0 } else { -1.0 }, 0.0)
                }
            };
            let mut rep = SlackReport::new(name, lhs, rhs, EstimateParams::default(), k, None, l, &ThirdOrderData::zeros(n));
            rep.scale = l[0].max(1e-300);
            Ok(rep.with_sample(config.seed, d))
        })
        .collect::<Result<_>>()?;
    let worst = results
        .iter()
        .min_by(|a, b| a.normalized().total_cmp(&b.normalized()).then(a.sample_id.cmp(&b.sample_id)))
        .cloned()
        .ok_or_else(|| Error::Config("suite needs at least one sample".into()))?;
    let bad: Vec<SlackReport> = results.into_iter().filter(|r| !r.passes(IDENTITY_TOL)).collect();
    Ok(outcome(Suite::Cascade, config.samples, IDENTITY_TOL, worst, bad))
}

fn lemma_runs(config: &SuiteConfig) -> Result<Vec<(Inequality, EstimateParams)>> {
    let k = config.k.unwrap_or(2);
    let ineqs: &[Inequality] = match config.suite {
        Suite::Lemma1 => &[Inequality::Lemma1],
        Suite::Corollary17 => &[Inequality::Corollary17],
        Suite::Lemma2 => &[Inequality::GenesisI, Inequality::Genesis2],
        Suite::Lemma3 => &[Inequality::Lemma3],
        _ => unreachable!("not a lemma suite"),
    };
    let mus: Vec<usize> = match (config.suite, config.mu) {
        (Suite::Lemma3, None) => (1..k).collect(),
        (_, Some(mu)) => vec![mu],
        (_, None) => vec![config.params.mu.min(k.saturating_sub(1)).max(1)],
    };
    let mut runs = Vec::new();
    for &i in ineqs {
        for &mu in &mus {
            runs.push((i, EstimateParams { mu, ..config.params.clone() }));
        }
    }
    Ok(runs)
}

fn lemma_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    let n = config.n.unwrap_or(4);
    let k = config.k.unwrap_or(2);
    let mut worst: Option<SlackReport> = None;
    let mut reports = Vec::new();
    let mut violations = 0;
    let mut total = 0;
    let tol = if config.search_restarts.is_some() { SEARCH_TOL } else { SAMPLE_TOL };
    for (ineq, params) in lemma_runs(config)? {
        let rep = match config.search_restarts {
            Some(restarts) => {
                let c = SearchConfig::new(n, k, restarts, config.seed, params);
                let rep = adversarial_search(ineq, &c)?;
                total += restarts as u64;
                if !rep.passes(tol) {
                    violations += 1;
                }
                rep
            }
            None => {
                let c = SweepConfig::new(ineq, n, k, config.samples, config.seed, params);
                let out = sweep(&c, tol)?;
                total += config.samples;
                violations += out.violation_count;
                reports.extend(out.violations);
                out.worst
            }
        };
        reports.push(rep.clone());
        if worst.as_ref().map_or(true, |w| rep.normalized() < w.normalized()) {
            worst = Some(rep);
        }
    }
    let worst = worst.ok_or_else(|| Error::Config("no configuration to run".into()))?;
    let summary = SuiteSummary {
        suite: config.suite.name().to_string(),
        samples: total,
        min_slack: worst.normalized(),
        worst_sample_id: worst.sample_id,
    };
    Ok(SuiteOutcome {
        summary,
        tolerance: tol,
        violation_count: violations,
        reports,
        measurements: BTreeMap::new(),
    })
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    if config.samples == 0 && config.search_restarts.is_none() {
        return Err(Error::Config("samples must be positive".into()));
    }
    if let (Some(n), Some(k)) = (config.n, config.k) {
        if !(n >= 2 && 1 <= k && k <= n) {
            return Err(Error::Config(format!("need 1 <= k <= n and n >= 2, got n = {n}, k = {k}")));
        }
    }
    if config.n.map_or(false, |n| n < 2) {
        return Err(Error::Config("n must be at least 2".into()));
    }
    match config.suite {
        Suite::Identities => identities(config),
        Suite::Subchecks => subchecks(config),
        Suite::Cascade => cascade(config),
        _ => lemma_suite(config),
    }
}
