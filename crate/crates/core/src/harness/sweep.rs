//! Randomized sweeps: one deterministic sample per draw index, evaluated in
//! parallel and reduced to the worst slack plus the violating samples.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{EstimateParams, ThirdOrderData};
use super::lemmas::{
    corollary17_slack, is_m_admissible, k_threshold, lemma1_slack, lemma2_slack, lemma3_slack, Inequality,
};
use super::report::SlackReport;
use crate::cone::{sample_indexed, ConeSampleConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::symfun::{elementary, Spectrum};

/// At most this many violating samples are kept (the lowest draw indices).
pub const MAX_KEPT_VIOLATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub inequality: Inequality,
    pub n: usize,
    pub k: usize,
    pub samples: u64,
    pub seed: u64,
    pub params: EstimateParams,
    /// Standard deviation of the `t[i][p][p]` entries.
    pub diag_scale: f64,
    /// Standard deviation of the remaining entries of `t`.
    pub offdiag_scale: f64,
}

impl SweepConfig {
    pub fn new(inequality: Inequality, n: usize, k: usize, samples: u64, seed: u64, params: EstimateParams) -> Self {
        Self {
            inequality,
            n,
            k,
            samples,
            seed,
            params,
            diag_scale: 1.0,
            offdiag_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if !(n >= 2 && 2 <= k && k <= n) {
            return Err(Error::Config(format!("need 2 <= k <= n, got n = {n}, k = {k}")));
        }
        self.params.validate(k).map_err(|e| Error::Config(e.to_string()))?;
        match self.inequality {
            Inequality::GenesisI | Inequality::Genesis2 | Inequality::Lemma3 if !is_m_admissible(self.params.m) => {
                Err(Error::Config(format!("m = {} not admissible", self.params.m)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub samples: u64,
    pub worst: SlackReport,
    pub violation_count: u64,
    /// Violating samples ordered by draw index, capped at [`MAX_KEPT_VIOLATIONS`].
    pub violations: Vec<SlackReport>,
}

impl SweepOutcome {
    pub fn min_normalized(&self) -> f64 {
        self.worst.normalized()
    }
}

/// Positive spectrum with entries `exp(-5 U)`, so ratios span about two decades.
fn positive_spectrum<R: Rng>(n: usize, rng: &mut R) -> Result<Spectrum> {
    Spectrum::new((0..n).map(|_| (-5.0 * rng.gen::<f64>()).exp()).collect())
}

/// `lambda_1 = 1`, `lambda_2..lambda_mu` in `[delta, 1]`, the rest in
/// `(0, delta']` with log-uniform spread.
pub fn pinched_spectrum<R: Rng>(n: usize, mu: usize, delta: f64, delta_prime: f64, rng: &mut R) -> Result<Spectrum> {
    let mut l = vec![1.0];
    for _ in 1..mu {
        l.push(delta + (1.0 - delta) * rng.gen::<f64>());
    }
    for _ in mu..n {
        l.push(delta_prime * (-8.0 * rng.gen::<f64>()).exp());
    }
    Spectrum::new(l)
}

/// Evaluates draw `draw` of the sweep.
pub fn draw_sample(config: &SweepConfig, draw: u64) -> Result<SlackReport> {
    let (n, k) = (config.n, config.k);
    let p = &config.params;
    let mut r = rng::stream(rng::child_seed(config.seed, 1), draw);
    let report = match config.inequality {
        Inequality::Lemma1 | Inequality::Corollary17 => {
            let mut cone = ConeSampleConfig::new(n, k, 1.0, config.seed);
            if draw % 2 == 1 {
                cone = cone.boundary_biased();
            }
            let w = sample_indexed(&cone, draw)?;
            let i = r.gen_range(0..n);
            let data = ThirdOrderData::gaussian(n, config.diag_scale, config.offdiag_scale, &mut r);
            if config.inequality == Inequality::Lemma1 {
                lemma1_slack(&w, k, p.ell, p.delta, i, &data)?
            } else {
                let sk = elementary(w.values(), k as isize);
                let psi = if draw % 4 < 2 { sk } else { sk * (0.05 + 0.95 * r.gen::<f64>()) };
                let big_k = k_threshold(k, p.delta, psi) * (1.0 + 1e-9);
                corollary17_slack(&w, k, big_k, i, &data, psi, p.delta)?
            }
        }
        Inequality::GenesisI | Inequality::Genesis2 => {
            let l = positive_spectrum(n, &mut r)?;
            let i = if config.inequality == Inequality::Genesis2 { 0 } else { r.gen_range(1..n) };
            let data = ThirdOrderData::gaussian(n, config.diag_scale, config.offdiag_scale, &mut r);
            lemma2_slack(&l, k, &data, p, i)?
        }
        Inequality::Lemma3 => {
            let l = pinched_spectrum(n, p.mu, p.delta, p.delta_prime, &mut r)?;
            let sk = elementary(l.values(), k as isize);
            let psi = if draw % 2 == 0 { sk } else { sk * (0.05 + 0.95 * r.gen::<f64>()) };
            let data = ThirdOrderData::gaussian(n, config.diag_scale, config.offdiag_scale, &mut r);
            let params = EstimateParams {
                psi_inf: psi,
                big_k: k_threshold(k, p.delta, psi) * (1.0 + 1e-9),
                ..p.clone()
            };
            lemma3_slack(&l, k, &data, &params)?
        }
    };
    Ok(report.with_sample(config.seed, draw))
}

#[derive(Default)]
struct Acc {
    worst: Option<SlackReport>,
    count: u64,
    violations: Vec<SlackReport>,
}

fn worse(a: &SlackReport, b: &SlackReport) -> bool {
    (a.normalized(), a.sample_id) < (b.normalized(), b.sample_id)
}

impl Acc {
    fn push(mut self, rep: SlackReport, tol: f64) -> Self {
        if !rep.passes(tol) {
            self.count += 1;
            self.violations.push(rep.clone());
            if self.violations.len() > 2 * MAX_KEPT_VIOLATIONS {
                self.trim();
            }
        }
        if self.worst.as_ref().map_or(true, |w| worse(&rep, w)) {
            self.worst = Some(rep);
        }
        self
    }

    fn merge(mut self, other: Acc) -> Self {
        self.count += other.count;
        self.violations.extend(other.violations);
        self.trim();
        self.worst = match (self.worst, other.worst) {
            (Some(a), Some(b)) => Some(if worse(&b, &a) { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    fn trim(&mut self) {
        self.violations.sort_by_key(|r| r.sample_id);
        self.violations.truncate(MAX_KEPT_VIOLATIONS);
    }
}

/// Evaluates draws `0..samples` in parallel. A sample violates when its
/// slack is below `-tol * scale`.
pub fn sweep(config: &SweepConfig, tol: f64) -> Result<SweepOutcome> {
    config.validate()?;
    if config.samples == 0 {
        return Err(Error::Config("a sweep needs at least one sample".into()));
    }
    let acc = (0..config.samples)
        .into_par_iter()
        .try_fold(Acc::default, |acc, draw| Ok::<_, Error>(acc.push(draw_sample(config, draw)?, tol)))
        .try_reduce(Acc::default, |a, b| Ok(a.merge(b)))?;
    let Acc {
        worst,
        count,
        mut violations,
    } = acc;
    violations.sort_by_key(|r| r.sample_id);
    violations.truncate(MAX_KEPT_VIOLATIONS);
    let mut worst = worst.expect("at least one sample");
    worst.worst = true;
    Ok(SweepOutcome {
        samples: config.samples,
        worst,
        violation_count: count,
        violations,
    })
}
