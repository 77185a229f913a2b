//! The `A_i ... E_i` third-order term algebra at a diagonal point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::data::{EstimateParams, ThirdOrderData};
use crate::error::{Error, Result};
use crate::symfun::{jet, Spectrum, SymJet};

/// `P_m = sum_j lambda_j^m`.
pub fn p_power_sum(lambda: &Spectrum, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("P_m needs m >= 1"));
    }
    Ok(lambda.values().iter().map(|l| l.powi(m as i32)).sum())
}

/// Divided difference of `x^{m-1}`: `sum_{q=0}^{m-2} a^q b^{m-2-q}`,
/// equal to `(a^{m-1} - b^{m-1}) / (a - b)` when `a != b`.
pub fn power_quotient(a: f64, b: f64, m: u32) -> f64 {
    let top = m as i32 - 2;
    (0..=top).map(|q| a.powi(q) * b.powi(top - q)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermsAbcde {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl TermsAbcde {
    /// `B + C + D - E`, the combination controlled by the Cauchy-Schwarz lemma.
    pub fn bcde(&self) -> f64 {
        self.b + self.c + self.d - self.e
    }

    pub fn abcde(&self) -> f64 {
        self.a + self.bcde()
    }
}

/// Precomputed per-spectrum quantities; evaluating terms for many slices
/// of third-order data reuses them.
#[derive(Debug, Clone)]
pub struct TermContext {
    pub m: u32,
    pub lambda: Vec<f64>,
    pub jet: SymJet,
    pub pm: f64,
    pow_m1: Vec<f64>,
    pow_m2: Vec<f64>,
}

impl TermContext {
    /// Requires a strictly positive spectrum (shift with Remark 1 first) and `m >= 2`.
    pub fn new(lambda: &Spectrum, k: usize, m: u32) -> Result<Self> {
        if !lambda.is_positive() {
            return Err(Error::domain(format!(
                "A..E terms need all eigenvalues positive, smallest is {}",
                lambda.smallest()
            )));
        }
        if m < 2 {
            return Err(Error::domain(format!("m = {m} must be >= 2")));
        }
        let l = lambda.values().to_vec();
        Ok(Self {
            m,
            jet: jet(lambda, k)?,
            pm: p_power_sum(lambda, m)?,
            pow_m1: l.iter().map(|x| x.powi(m as i32 - 1)).collect(),
            pow_m2: l.iter().map(|x| x.powi(m as i32 - 2)).collect(),
            lambda: l,
        })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `(A_i, ..., E_i)` for the diagonal slice `w[p] = D_i g_{pp}`.
    pub fn terms(&self, w: &[Complex64], big_k: f64, i: usize) -> TermsAbcde {
        let n = self.n();
        let m = self.m as f64;
        let pm = self.pm;
        let grad = &self.jet.grad;
        let hess = &self.jet.hess_diag;
        let w2: Vec<f64> = w.iter().map(|z| z.norm_sqr()).collect();

        let d_sigma = self.jet.grad_dot(w);
        let a = self.pow_m1[i] / pm * (big_k * d_sigma.norm_sqr() - self.jet.hess_form(w));

        let b = (0..n).map(|p| hess[p][i] * self.pow_m1[p] * w2[p]).sum::<f64>() / pm;

        let c = (m - 1.0) * grad[i] / pm * (0..n).map(|p| self.pow_m2[p] * w2[p]).sum::<f64>();

        let d = (0..n)
            .filter(|&p| p != i)
            .map(|p| grad[p] * power_quotient(self.lambda[p], self.lambda[i], self.m) * w2[p])
            .sum::<f64>()
            / pm;

        let weighted: Complex64 = (0..n).map(|p| w[p] * self.pow_m1[p]).sum();
        let e = m * grad[i] / (pm * pm) * weighted.norm_sqr();

        TermsAbcde { a, b, c, d, e }
    }

    /// `P_m^2 E_i` from the three-term expansion (diagonal, `i`-th, and cross terms).
    pub fn e_scaled_expanded(&self, w: &[Complex64], i: usize) -> f64 {
        let n = self.n();
        let mg = self.m as f64 * self.jet.grad[i];
        let mut off_i = 0.0;
        for p in (0..n).filter(|&p| p != i) {
            off_i += self.pow_m1[p] * self.pow_m1[p] * w[p].norm_sqr();
        }
        let own = self.pow_m1[i] * self.pow_m1[i] * w[i].norm_sqr();
        let mut cross = 0.0;
        for p in 0..n {
            for q in (0..n).filter(|&q| q != p) {
                cross += self.pow_m1[p] * self.pow_m1[q] * (w[p] * w[q].conj()).re;
            }
        }
        mg * off_i + mg * own + mg * cross
    }
}

/// `(A_i, B_i, C_i, D_i, E_i)` with `K = params.big_k` and `m = params.m`.
pub fn terms_abcde(
    lambda: &Spectrum,
    k: usize,
    data: &ThirdOrderData,
    params: &EstimateParams,
    i: usize,
) -> Result<TermsAbcde> {
    check_index(lambda, data, i)?;
    let ctx = TermContext::new(lambda, k, params.m)?;
    Ok(ctx.terms(&data.diagonal_slice(i), params.big_k, i))
}

pub(crate) fn check_index(lambda: &Spectrum, data: &ThirdOrderData, i: usize) -> Result<()> {
    if data.n() != lambda.n() {
        return Err(Error::domain(format!(
            "third-order data has n = {} but the spectrum has n = {}",
            data.n(),
            lambda.n()
        )));
    }
    if i >= lambda.n() {
        return Err(Error::domain(format!("index {i} out of range for n = {}", lambda.n())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(p_power_sum(&spec(&[1.0, 1.0, 1.0]), 7).unwrap(), 3.0);
        assert_eq!(p_power_sum(&spec(&[2.0, 1.0]), 3).unwrap(), 9.0);
        assert_eq!(p_power_sum(&spec(&[2.5, -1.0, 0.5]), 1).unwrap(), 2.0);
        assert!(p_power_sum(&spec(&[2.0, 1.0]), 0).is_err());
    }

    #[test]
    fn power_quotient_matches_division() {
        assert_eq!(power_quotient(2.0, 2.0, 4), 12.0); // 3 x^2 at x = 2
        let (a, b) = (1.7f64, 0.3f64);
        let want = (a.powi(6) - b.powi(6)) / (a - b);
        assert!((power_quotient(a, b, 7) - want).abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_terms() {
        let t = terms_abcde(&spec(&[3.0, 2.0, 1.0]), 2, &ThirdOrderData::zeros(3), &EstimateParams::default(), 1).unwrap();
        assert_eq!(t, TermsAbcde { a: 0.0, b: 0.0, c: 0.0, d: 0.0, e: 0.0 });
    }

    #[test]
    fn e_term_example() {
        let mut data = ThirdOrderData::zeros(2);
        data.set(0, 0, 0, Complex64::new(1.0, 0.0));
        let params = EstimateParams { m: 7, big_k: 1.0, ..Default::default() };
        let t = terms_abcde(&spec(&[1.0, 1.0]), 2, &data, &params, 0).unwrap();
        assert!((t.e - 7.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_spectrum_is_a_domain_error() {
        let r = terms_abcde(&spec(&[3.0, 2.0, -0.5]), 2, &ThirdOrderData::zeros(3), &EstimateParams::default(), 0);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    /// Straight transcription of the five definitions, written without the
    /// shared context so the two paths stay independent.
    fn naive(l: &[f64], k: usize, w: &[Complex64], big_k: f64, m: u32, i: usize) -> [f64; 5] {
        use crate::symfun::elementary_excluding as ex;
        let n = l.len();
        let k = k as isize;
        let pm: f64 = l.iter().map(|x| x.powi(m as i32)).sum();
        let g = |p: usize| ex(l, k - 1, &[p]);
        let h = |p: usize, q: usize| if p == q { 0.0 } else { ex(l, k - 2, &[p, q]) };
        let mut dsig = Complex64::new(0.0, 0.0);
        for p in 0..n {
            dsig += w[p] * g(p);
        }
        let mut hf = 0.0;
        for p in 0..n {
            for q in 0..n {
                hf += h(p, q) * (w[p] * w[q].conj()).re;
            }
        }
        let mm = m as i32;
        let a = l[i].powi(mm - 1) / pm * (big_k * dsig.norm_sqr() - hf);
        let b: f64 = (0..n).map(|p| h(p, i) * l[p].powi(mm - 1) * w[p].norm_sqr()).sum::<f64>() / pm;
        let c = (m as f64 - 1.0) * g(i) / pm * (0..n).map(|p| l[p].powi(mm - 2) * w[p].norm_sqr()).sum::<f64>();
        let d: f64 = (0..n)
            .filter(|&p| p != i)
            .map(|p| g(p) * (l[p].powi(mm - 1) - l[i].powi(mm - 1)) / (l[p] - l[i]) * w[p].norm_sqr())
            .sum::<f64>()
            / pm;
        let mut s = Complex64::new(0.0, 0.0);
        for p in 0..n {
            s += w[p] * l[p].powi(mm - 1);
        }
        let e = m as f64 * g(i) / (pm * pm) * s.norm_sqr();
        [a, b, c, d, e]
    }

    #[test]
    fn terms_match_independent_transcription_and_signs() {
        for draw in 0..300 {
            let mut r = rng::stream(11, draw);
            let n = 3 + (draw as usize % 3);
            let k = 2 + (draw as usize % (n - 1)).min(n - 2);
            let l: Vec<f64> = (0..n).map(|_| 0.2 + 2.0 * rand::Rng::gen::<f64>(&mut r)).collect();
            let s = Spectrum::new(l).unwrap();
            let data = ThirdOrderData::gaussian(n, 1.0, 1.0, &mut r);
            let ctx = TermContext::new(&s, k, 7).unwrap();
            for i in 0..n {
                let w = data.diagonal_slice(i);
                let t = ctx.terms(&w, 2.0, i);
                let want = naive(s.values(), k, &w, 2.0, 7, i);
                for (got, want) in [t.a, t.b, t.c, t.d, t.e].iter().zip(want) {
                    assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
                }
                assert!(t.b >= 0.0 && t.c >= 0.0 && t.d >= 0.0);
                let scaled = ctx.pm * ctx.pm * t.e;
                let expanded = ctx.e_scaled_expanded(&w, i);
                let abs_sum: f64 = (0..n).map(|p| s.values()[p].powi(6) * w[p].norm()).sum();
                let mag = 7.0 * ctx.jet.grad[i] * abs_sum * abs_sum;
                assert!((scaled - expanded).abs() <= 1e-12 * mag);
            }
        }
    }
}
