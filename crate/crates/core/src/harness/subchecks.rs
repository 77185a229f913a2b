//! Measured constants inside the pinched-gap argument, and the case analysis
//! that decides where it applies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cone::in_cone;
use crate::error::{Error, Result};
use crate::symfun::{elementary, elementary_excluding, Spectrum};

pub const F_PQ_MIN: &str = "f_pq_min";
pub const F_PQ_MAX: &str = "f_pq_max";
pub const MU_MINUS_1_CONSTANT: &str = "mu_minus_1_constant";
pub const LEFTOVER_RATIO_MIN: &str = "leftover_ratio_min";

/// `F^{pq} = sigma_mu^{pp} sigma_mu^{qq} - sigma_mu sigma_mu^{pp,qq}` computed
/// from its definition (not the Newton-MacLaurin form).
pub fn f_pq(lambda: &[f64], mu: usize, p: usize, q: usize) -> f64 {
    let mu = mu as isize;
    let gp = elementary_excluding(lambda, mu - 1, &[p]);
    let gq = elementary_excluding(lambda, mu - 1, &[q]);
    let h = elementary_excluding(lambda, mu - 2, &[p, q]);
    gp * gq - elementary(lambda, mu) * h
}

/// `sigma_{mu-1}(lambda|pq)^2 - sigma_mu(lambda|pq) sigma_{mu-2}(lambda|pq)`.
pub fn newton_maclaurin_pq(lambda: &[f64], mu: usize, p: usize, q: usize) -> f64 {
    let mu = mu as isize;
    let a = elementary_excluding(lambda, mu - 1, &[p, q]);
    a * a - elementary_excluding(lambda, mu, &[p, q]) * elementary_excluding(lambda, mu - 2, &[p, q])
}

/// Named measurements of the constants used in the pinched-gap proof.
///
/// * `f_pq_min`, `f_pq_max`: extremes of `F^{pq}` over `p != q`.
/// * `mu_minus_1_constant` (only for `mu >= 2`): smallest `c` with
///   `sigma_{mu-1}(lambda|pq) <= c lambda_1...lambda_{mu+1} / (lambda_p lambda_q)`
///   over `p != q <= mu`.
/// * `leftover_ratio_min` (when `mu < n`): minimum over `p > mu` of
///   `sigma_k^{pp} sigma_mu^2 / (lambda_1 sigma_k (sigma_mu^{pp})^2)`.
pub fn lemma3_subchecks(lambda: &Spectrum, k: usize, mu: usize) -> Result<BTreeMap<String, f64>> {
    let n = lambda.n();
    if !(1 <= mu && mu < k && k <= n) {
        return Err(Error::precondition(format!("need 1 <= mu <= k - 1, got mu = {mu}, k = {k}")));
    }
    if !in_cone(lambda, k) || !lambda.is_positive() {
        return Err(Error::precondition("subchecks need a positive spectrum in Gamma_k"));
    }
    let l = lambda.values();
    let mut out = BTreeMap::new();

    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    for p in 0..n {
        for q in (0..n).filter(|&q| q != p) {
            let f = f_pq(l, mu, p, q);
            fmin = fmin.min(f);
            fmax = fmax.max(f);
        }
    }
    out.insert(F_PQ_MIN.to_string(), fmin);
    out.insert(F_PQ_MAX.to_string(), fmax);

    if mu >= 2 {
        let top: f64 = l[..=mu].iter().product();
        let mut c = 0.0f64;
        for p in 0..mu {
            for q in (0..mu).filter(|&q| q != p) {
                let s = elementary_excluding(l, mu as isize - 1, &[p, q]);
                c = c.max(s * l[p] * l[q] / top);
            }
        }
        out.insert(MU_MINUS_1_CONSTANT.to_string(), c);
    }

    if mu < n {
        let sk = elementary(l, k as isize);
        let smu = elementary(l, mu as isize);
        let ratio = (mu..n)
            .map(|p| {
                let gk = elementary_excluding(l, k as isize - 1, &[p]);
                let gmu = elementary_excluding(l, mu as isize - 1, &[p]);
                gk * smu * smu / (l[0] * sk * gmu * gmu)
            })
            .fold(f64::INFINITY, f64::min);
        out.insert(LEFTOVER_RATIO_MIN.to_string(), ratio);
    }
    Ok(out)
}

/// Outcome of the pinching case analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CascadeDiagnosis {
    /// `lambda_j >= delta_j lambda_1` for every `j <= k`, so
    /// `sigma_bound >= sigma_k >= lambda_1...lambda_k >= delta_k^{k-1} lambda_1^k`.
    AllPinched {
        /// `sigma_bound / delta_k^{k-1}`; bounds `lambda_1` once `lambda_1 >= 1`.
        lambda1_bound: f64,
        /// `(sigma_bound / delta_k^{k-1})^{1/k}`; bounds `lambda_1` unconditionally.
        lambda1_root_bound: f64,
        sigma_k: f64,
        top_product: f64,
    },
    /// First `j` (1-based) with `lambda_j < delta_j lambda_1`; the gap lemma
    /// applies with `mu = j - 1`.
    Gap { j: usize, mu: usize },
}

/// Walk `j = 2..=k` with `deltas = (delta_2, ..., delta_k)`.
pub fn pinching_cascade(lambda: &Spectrum, k: usize, sigma_bound: f64, deltas: &[f64]) -> Result<CascadeDiagnosis> {
    let n = lambda.n();
    if !(2 <= k && k <= n) {
        return Err(Error::domain(format!("need 2 <= k <= n, got k = {k}")));
    }
    if deltas.len() != k - 1 {
        return Err(Error::domain(format!("expected {} deltas, got {}", k - 1, deltas.len())));
    }
    if deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) || deltas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain("deltas must be decreasing in (0, 1)"));
    }
    if !lambda.is_positive() || !in_cone(lambda, k) {
        return Err(Error::precondition("cascade needs a positive spectrum in Gamma_k"));
    }
    let l = lambda.values();
    for j in 2..=k {
        if l[j - 1] < deltas[j - 2] * l[0] {
            return Ok(CascadeDiagnosis::Gap { j, mu: j - 1 });
        }
    }
    let bound = sigma_bound / deltas[k - 2].powi(k as i32 - 1);
    Ok(CascadeDiagnosis::AllPinched {
        lambda1_bound: bound,
        lambda1_root_bound: bound.powf(1.0 / k as f64),
        sigma_k: elementary(l, k as isize),
        top_product: l[..k].iter().product(),
    })
}
