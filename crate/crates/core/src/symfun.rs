//! Elementary symmetric functions of eigenvalue vectors.
//!
//! Everything here works at a diagonal point `g = diag(lambda)`. With
//! `sigma_k^{pp} = dsigma_k/dlambda_p` the first derivatives are
//! `sigma_{k-1}(lambda|p)` and the mixed second derivatives are
//! `sigma_{k-2}(lambda|pq)`. The eigenvalue-quotient coefficients
//! `(sigma_k^{pp} - sigma_k^{qq}) / (lambda_p - lambda_q)` are always taken in
//! closed form, so coincident eigenvalues need no special casing.
//!
//! Conventions: `sigma_0 = 1`, and `sigma_m = 0` for `m < 0` or `m` larger
//! than the number of entries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real eigenvalue vector ordered descending, `lambda_1 >= ... >= lambda_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    /// `perm[i]` is the position in the caller's input of sorted entry `i`.
    perm: Vec<usize>,
}

impl Spectrum {
    /// Sorts `values` descending. Requires at least two finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain(format!(
                "spectrum needs n >= 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite eigenvalue {bad}")));
        }
        let mut perm: Vec<usize> = (0..values.len()).collect();
        // stable, so ties keep input order
        perm.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let values = perm.iter().map(|&i| values[i]).collect();
        Ok(Self { values, perm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Largest eigenvalue `lambda_1`.
    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    /// Smallest eigenvalue `lambda_n`.
    pub fn smallest(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_positive(&self) -> bool {
        self.smallest() > 0.0
    }

    /// `lambda + shift * (1, ..., 1)`; ordering is unchanged.
    pub fn shifted(&self, shift: f64) -> Spectrum {
        Spectrum {
            values: self.values.iter().map(|v| v + shift).collect(),
            perm: self.perm.clone(),
        }
    }

    /// `c * lambda` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Spectrum {
        assert!(c > 0.0, "scaling must preserve the ordering");
        Spectrum {
            values: self.values.iter().map(|v| c * v).collect(),
            perm: self.perm.clone(),
        }
    }
}

/// `sigma_0, ..., sigma_kmax` of an arbitrary slice in one O(n kmax) pass.
///
/// Entries past `values.len()` are zero.
pub fn elementary_all(values: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (seen, &x) in values.iter().enumerate() {
        let top = kmax.min(seen + 1);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// `sigma_k` of an arbitrary slice with the hard conventions for `k < 0`
/// and `k > len`. No validation.
pub fn elementary(values: &[f64], k: isize) -> f64 {
    if k < 0 || k as usize > values.len() {
        return 0.0;
    }
    elementary_all(values, k as usize)[k as usize]
}

/// `sigma_k(values | excluded)`; excluded indices are assumed distinct and
/// in range.
pub fn elementary_excluding(values: &[f64], k: isize, excluded: &[usize]) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let kept: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, &v)| v)
        .collect();
    elementary(&kept, k)
}

/// `k`-th elementary symmetric function of the spectrum, `0 <= k <= n`.
pub fn sigma(lambda: &Spectrum, k: usize) -> Result<f64> {
    if k > lambda.n() {
        return Err(Error::domain(format!("k = {k} exceeds n = {}", lambda.n())));
    }
    Ok(elementary(lambda.values(), k as isize))
}

/// `sigma_k` with the `excluded` entries (0-based) removed.
pub fn sigma_excluding(lambda: &Spectrum, k: usize, excluded: &[usize]) -> Result<f64> {
    let n = lambda.n();
    for (a, &i) in excluded.iter().enumerate() {
        if i >= n {
            return Err(Error::domain(format!("excluded index {i} out of range for n = {n}")));
        }
        if excluded[..a].contains(&i) {
            return Err(Error::domain(format!("excluded index {i} repeated")));
        }
    }
    if k + excluded.len() > n {
        return Err(Error::domain(format!(
            "k = {k} exceeds the {} remaining entries",
            n - excluded.len()
        )));
    }
    Ok(elementary_excluding(lambda.values(), k as isize, excluded))
}

/// First and second derivative data of `sigma_k` at `diag(lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymJet {
    pub k: usize,
    pub value: f64,
    /// `grad[p] = sigma_k^{pp} = sigma_{k-1}(lambda|p)`
    pub grad: Vec<f64>,
    /// `hess_diag[p][q] = sigma_k^{pp,qq} = sigma_{k-2}(lambda|pq)`, zero on the diagonal.
    pub hess_diag: Vec<Vec<f64>>,
    /// Divided differences `(grad[p] - grad[q]) / (lambda_p - lambda_q) = -sigma_{k-2}(lambda|pq)`.
    pub quotient: Vec<Vec<f64>>,
}

impl SymJet {
    pub fn n(&self) -> usize {
        self.grad.len()
    }

    /// `F = sum_p sigma_k^{pp}`.
    pub fn trace(&self) -> f64 {
        self.grad.iter().sum()
    }

    /// `sum_p sigma_k^{pp} w_p`, the chain rule for `D sigma_k` along a diagonal slice.
    pub fn grad_dot(&self, w: &[Complex64]) -> Complex64 {
        self.grad.iter().zip(w).map(|(g, w)| w * *g).sum()
    }

    /// `sum_{p,q} sigma_k^{pp,qq} w_p conj(w_q)`; real because `hess_diag` is symmetric.
    pub fn hess_form(&self, w: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for (p, row) in self.hess_diag.iter().enumerate() {
            for (q, h) in row.iter().enumerate() {
                if p != q {
                    acc += h * (w[p] * w[q].conj()).re;
                }
            }
        }
        acc
    }
}

/// `sigma_k` together with its first and second derivatives at `diag(lambda)`.
pub fn jet(lambda: &Spectrum, k: usize) -> Result<SymJet> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(Error::domain(format!("jet needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let l = lambda.values();
    let k = k as isize;
    let value = elementary(l, k);
    let grad = (0..n).map(|p| elementary_excluding(l, k - 1, &[p])).collect();
    let mut hess_diag = vec![vec![0.0; n]; n];
    let mut quotient = vec![vec![0.0; n]; n];
    for p in 0..n {
        for q in (p + 1)..n {
            let h = elementary_excluding(l, k - 2, &[p, q]);
            hess_diag[p][q] = h;
            hess_diag[q][p] = h;
            quotient[p][q] = -h;
            quotient[q][p] = -h;
        }
    }
    Ok(SymJet {
        k: k as usize,
        value,
        grad,
        hess_diag,
        quotient,
    })
}

/// Second derivative `sigma_k^{pq,rs} w_{qp} conj(w_{sr})` at the diagonal point
/// described by `jet`, for the `n x n` slice `w` (row `p`, column `q` holds `w_{pq}`).
pub fn second_form_contraction(jet: &SymJet, w: &[Vec<Complex64>]) -> Result<f64> {
    let n = jet.n();
    if w.len() != n || w.iter().any(|row| row.len() != n) {
        return Err(Error::domain(format!("w must be {n} x {n}")));
    }
    let diag: Vec<Complex64> = (0..n).map(|p| w[p][p]).collect();
    let mut acc = jet.hess_form(&diag);
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc += jet.quotient[p][q] * w[p][q].norm_sqr();
            }
        }
    }
    Ok(acc)
}

/// `|sum_p lambda_p sigma_k^{pp} - k sigma_k|`.
pub fn euler_check(lambda: &Spectrum, k: usize) -> Result<f64> {
    let j = jet(lambda, k)?;
    let lhs: f64 = lambda.values().iter().zip(&j.grad).map(|(l, g)| l * g).sum();
    Ok((lhs - k as f64 * j.value).abs())
}
