//! Slack evaluation for the exactly stated inequalities: the concavity
//! inequality, its `ell = 1` corollary, the two Cauchy-Schwarz estimates and
//! the pinched-gap estimate for `i = 1`.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::data::{EstimateParams, ThirdOrderData};
use super::report::SlackReport;
use super::terms::{check_index, TermContext};
use crate::cone::in_cone;
use crate::error::{Error, Result};
use crate::symfun::{jet, Spectrum, SymJet};

pub const LEMMA1: &str = "lemma1";
pub const COROLLARY17: &str = "corollary17";
pub const GENESIS_I: &str = "lemma2_genesisi";
pub const GENESIS_2: &str = "lemma2_genesis2";
pub const LEMMA3: &str = "lemma3";

/// The exactly stated inequalities the harness can sweep and search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Inequality {
    #[serde(rename = "lemma1")]
    Lemma1,
    #[serde(rename = "corollary17")]
    Corollary17,
    #[serde(rename = "lemma2_genesisi")]
    GenesisI,
    #[serde(rename = "lemma2_genesis2")]
    Genesis2,
    #[serde(rename = "lemma3")]
    Lemma3,
}

impl Inequality {
    pub const ALL: [Inequality; 5] = [
        Inequality::Lemma1,
        Inequality::Corollary17,
        Inequality::GenesisI,
        Inequality::Genesis2,
        Inequality::Lemma3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::Lemma1 => LEMMA1,
            Inequality::Corollary17 => COROLLARY17,
            Inequality::GenesisI => GENESIS_I,
            Inequality::Genesis2 => GENESIS_2,
            Inequality::Lemma3 => LEMMA3,
        }
    }
}

impl std::fmt::Display for Inequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Inequality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Inequality::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown inequality '{s}'")))
    }
}

/// `m^2 <= (2m - 4)(m - 2)`, i.e. `m >= 4 + 2 sqrt 2`.
pub fn is_m_admissible(m: u32) -> bool {
    let m = m as i64;
    m * m <= (2 * m - 4) * (m - 2)
}

/// `(1 - alpha + alpha / delta) / psi_inf` with `alpha = 1 / (k - 1)`: the
/// `K` above which the `ell = 1` corollary holds whenever `sigma_k >= psi_inf`.
pub fn k_threshold(k: usize, delta: f64, psi_inf: f64) -> f64 {
    let alpha = 1.0 / (k as f64 - 1.0);
    (1.0 - alpha + alpha / delta) / psi_inf
}

/// Both sides of the concavity inequality from precomputed jets of `sigma_k` and `sigma_ell`.
pub(crate) fn lemma1_sides(jk: &SymJet, jl: &SymJet, delta: f64, w: &[Complex64]) -> (f64, f64) {
    let alpha = 1.0 / (jk.k as f64 - jl.k as f64);
    let sk = jk.value;
    let sl = jl.value;
    let lhs = -jk.hess_form(w) + (1.0 - alpha + alpha / delta) * jk.grad_dot(w).norm_sqr() / sk;
    let rhs = sk * (alpha + 1.0 - delta * alpha) * (jl.grad_dot(w) / sl).norm_sqr() - sk / sl * jl.hess_form(w);
    (lhs, rhs)
}

/// `-sigma_k^{pp,qq} w_p conj(w_q) + K |D sigma_k|^2`.
pub(crate) fn corollary17_lhs(jk: &SymJet, big_k: f64, w: &[Complex64]) -> f64 {
    -jk.hess_form(w) + big_k * jk.grad_dot(w).norm_sqr()
}

/// Both sides of the Cauchy-Schwarz estimate for index `i`, scaled by `P_m^2`.
/// For `i = 0` (the largest eigenvalue) the right side is the genesis-2 bound,
/// otherwise it is zero.
pub(crate) fn lemma2_sides(ctx: &TermContext, w: &[Complex64], i: usize) -> (f64, f64) {
    let t = ctx.terms(w, 0.0, i);
    let pm = ctx.pm;
    let lhs = pm * pm * t.bcde();
    if i != 0 {
        return (lhs, 0.0);
    }
    let m = ctx.m as i32;
    let l1 = ctx.lambda[0];
    let g = &ctx.jet.grad;
    let spread: f64 = (1..ctx.n()).map(|p| g[p] * w[p].norm_sqr()).sum();
    let rhs = pm * l1.powi(m - 2) * spread - l1.powi(m) * g[0] * l1.powi(m - 2) * w[0].norm_sqr();
    (lhs, rhs)
}

fn require_cone(w: &Spectrum, k: usize) -> Result<()> {
    if !in_cone(w, k) {
        return Err(Error::precondition(format!("{:?} is not in Gamma_{k}", w.values())));
    }
    Ok(())
}

/// Concavity inequality with `alpha = 1/(k - ell)` at index `i`, using `w_{ppi} = t[i][p][p]`.
pub fn lemma1_slack(
    w: &Spectrum,
    k: usize,
    ell: usize,
    delta: f64,
    i: usize,
    data: &ThirdOrderData,
) -> Result<SlackReport> {
    check_index(w, data, i)?;
    if !(1 <= ell && ell < k && k <= w.n()) {
        return Err(Error::precondition(format!("need 1 <= ell < k <= n, got ell = {ell}, k = {k}")));
    }
    if !(delta > 0.0) {
        return Err(Error::precondition(format!("delta = {delta} must be positive")));
    }
    require_cone(w, k)?;
    let jk = jet(w, k)?;
    let jl = jet(w, ell)?;
    let (lhs, rhs) = lemma1_sides(&jk, &jl, delta, &data.diagonal_slice(i));
    let params = EstimateParams {
        ell,
        delta,
        ..Default::default()
    };
    Ok(SlackReport::new(LEMMA1, lhs, rhs, params, k, Some(i), w.values(), data))
}

/// `-sigma_k^{pp,qq} D_i g_pp D_i g_qq + K |D_i sigma_k|^2 >= 0` for `K` above
/// [`k_threshold`].
pub fn corollary17_slack(
    w: &Spectrum,
    k: usize,
    big_k: f64,
    i: usize,
    data: &ThirdOrderData,
    psi_inf: f64,
    delta: f64,
) -> Result<SlackReport> {
    check_index(w, data, i)?;
    if !(2 <= k && k <= w.n()) {
        return Err(Error::precondition(format!("need 2 <= k <= n, got k = {k}")));
    }
    if !(delta > 0.0 && psi_inf > 0.0) {
        return Err(Error::precondition("delta and psi_inf must be positive"));
    }
    require_cone(w, k)?;
    let jk = jet(w, k)?;
    if jk.value < psi_inf {
        return Err(Error::precondition(format!(
            "sigma_k = {} is below psi_inf = {psi_inf}",
            jk.value
        )));
    }
    let threshold = k_threshold(k, delta, psi_inf);
    if !(big_k > threshold) {
        return Err(Error::precondition(format!("K = {big_k} is not above the threshold {threshold}")));
    }
    let lhs = corollary17_lhs(&jk, big_k, &data.diagonal_slice(i));
    let params = EstimateParams {
        big_k,
        delta,
        psi_inf,
        ..Default::default()
    };
    Ok(SlackReport::new(COROLLARY17, lhs, 0.0, params, k, Some(i), w.values(), data))
}

/// Cauchy-Schwarz estimate: genesis-2 form for `i = 0`, nonnegativity of
/// `P_m^2 (B_i + C_i + D_i - E_i)` otherwise.
pub fn lemma2_slack(
    lambda: &Spectrum,
    k: usize,
    data: &ThirdOrderData,
    params: &EstimateParams,
    i: usize,
) -> Result<SlackReport> {
    check_index(lambda, data, i)?;
    if !is_m_admissible(params.m) {
        return Err(Error::precondition(format!("m = {} not admissible", params.m)));
    }
    if !lambda.is_positive() {
        return Err(Error::precondition("lemma 2 needs a positive spectrum"));
    }
    let ctx = TermContext::new(lambda, k, params.m)?;
    let (lhs, rhs) = lemma2_sides(&ctx, &data.diagonal_slice(i), i);
    let name = if i == 0 { GENESIS_2 } else { GENESIS_I };
    Ok(SlackReport::new(name, lhs, rhs, params.clone(), k, Some(i), lambda.values(), data))
}

/// Checks the pinched-gap hypotheses `lambda_mu >= delta lambda_1` and
/// `lambda_{mu+1} <= delta' lambda_1` (1-based `mu`).
pub fn pinching_holds(lambda: &[f64], mu: usize, delta: f64, delta_prime: f64) -> bool {
    mu >= 1 && mu < lambda.len() && lambda[mu - 1] >= delta * lambda[0] && lambda[mu] <= delta_prime * lambda[0]
}

/// `A_1 + B_1 + C_1 + D_1 - E_1 >= 0` under the pinched-gap hypotheses, with
/// `A_1` built from `params.big_k`.
pub fn lemma3_slack(
    lambda: &Spectrum,
    k: usize,
    data: &ThirdOrderData,
    params: &EstimateParams,
) -> Result<SlackReport> {
    check_index(lambda, data, 0)?;
    params.validate(k)?;
    if k < 2 || k > lambda.n() {
        return Err(Error::precondition(format!("need 2 <= k <= n, got k = {k}")));
    }
    if !lambda.is_positive() {
        return Err(Error::precondition("lemma 3 needs a positive spectrum"));
    }
    if !pinching_holds(lambda.values(), params.mu, params.delta, params.delta_prime) {
        return Err(Error::precondition(format!(
            "pinching hypotheses fail for mu = {}, delta = {}, delta' = {} at {:?}",
            params.mu,
            params.delta,
            params.delta_prime,
            lambda.values()
        )));
    }
    if !is_m_admissible(params.m) {
        return Err(Error::precondition(format!("m = {} not admissible", params.m)));
    }
    let ctx = TermContext::new(lambda, k, params.m)?;
    if ctx.jet.value < params.psi_inf {
        return Err(Error::precondition(format!(
            "sigma_k = {} is below psi_inf = {}",
            ctx.jet.value, params.psi_inf
        )));
    }
    let threshold = k_threshold(k, params.delta, params.psi_inf);
    if !(params.big_k > threshold) {
        return Err(Error::precondition(format!(
            "K = {} is not above the threshold {threshold}",
            params.big_k
        )));
    }
    let lhs = ctx.terms(&data.diagonal_slice(0), params.big_k, 0).abcde();
    Ok(SlackReport::new(LEMMA3, lhs, 0.0, params.clone(), k, Some(0), lambda.values(), data))
}
