use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Complex tensor `t[i][p][q]` standing for `D_i g_{qp}` at a point where
/// `g` is diagonal. No symmetry between `i` and `q` is imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrderData {
    n: usize,
    t: Vec<Complex64>,
}

impl ThirdOrderData {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            t: vec![Complex64::new(0.0, 0.0); n * n * n],
        }
    }

    /// Complex Gaussian entries; diagonal slots `t[i][p][p]` get standard
    /// deviation `diag_scale`, the rest `offdiag_scale`.
    pub fn gaussian<R: Rng + ?Sized>(n: usize, diag_scale: f64, offdiag_scale: f64, rng: &mut R) -> Self {
        let mut out = Self::zeros(n);
        for i in 0..n {
            for p in 0..n {
                for q in 0..n {
                    let s = if p == q { diag_scale } else { offdiag_scale };
                    out.set(i, p, q, rng::complex_normal(rng) * s);
                }
            }
        }
        out
    }

    /// Only the slice `i` is populated, with `t[i][p][p] = diag[p]`.
    pub fn from_diagonal_slice(n: usize, i: usize, diag: &[Complex64]) -> Self {
        let mut out = Self::zeros(n);
        for (p, &w) in diag.iter().enumerate() {
            out.set(i, p, p, w);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, p: usize, q: usize) -> usize {
        (i * self.n + p) * self.n + q
    }

    #[inline]
    pub fn get(&self, i: usize, p: usize, q: usize) -> Complex64 {
        self.t[self.idx(i, p, q)]
    }

    pub fn set(&mut self, i: usize, p: usize, q: usize, v: Complex64) {
        let at = self.idx(i, p, q);
        self.t[at] = v;
    }

    /// `(D_i g_{11}, ..., D_i g_{nn})`.
    pub fn diagonal_slice(&self, i: usize) -> Vec<Complex64> {
        (0..self.n).map(|p| self.get(i, p, p)).collect()
    }

    /// The `n x n` slice `D_i g` as rows.
    pub fn slice(&self, i: usize) -> Vec<Vec<Complex64>> {
        (0..self.n)
            .map(|p| (0..self.n).map(|q| self.get(i, p, q)).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.t.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            t: self.t.iter().map(|z| z * c).collect(),
        }
    }

    /// New tensor whose index `a` carries old index `perm[a]` in every slot.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for p in 0..self.n {
                for q in 0..self.n {
                    out.set(i, p, q, self.get(perm[i], perm[p], perm[q]));
                }
            }
        }
        out
    }

    pub fn real_part(&self) -> Vec<Vec<Vec<f64>>> {
        self.nested(|z| z.re)
    }

    pub fn imag_part(&self) -> Vec<Vec<Vec<f64>>> {
        self.nested(|z| z.im)
    }

    fn nested(&self, f: impl Fn(Complex64) -> f64) -> Vec<Vec<Vec<f64>>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|p| (0..self.n).map(|q| f(self.get(i, p, q))).collect())
                    .collect()
            })
            .collect()
    }

    pub fn from_parts(re: &[Vec<Vec<f64>>], im: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = re.len();
        let shape_ok = |a: &[Vec<Vec<f64>>]| a.len() == n && a.iter().all(|s| s.len() == n && s.iter().all(|r| r.len() == n));
        if !shape_ok(re) || !shape_ok(im) {
            return Err(Error::Format("third-order data must be n x n x n".into()));
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for p in 0..n {
                for q in 0..n {
                    out.set(i, p, q, Complex64::new(re[i][p][q], im[i][p][q]));
                }
            }
        }
        Ok(out)
    }
}

/// Dials of the maximum-principle argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    /// Power in `P_m = sum lambda_j^m`.
    pub m: u32,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "N")]
    pub big_n: f64,
    /// Coefficient of `|D_i sigma_k|^2` in `A_i`.
    #[serde(rename = "K")]
    pub big_k: f64,
    pub tau: f64,
    /// Pinching ratio: `lambda_mu >= delta lambda_1`. Also the free parameter of the concavity inequality.
    pub delta: f64,
    /// Gap ratio: `lambda_{mu+1} <= delta_prime lambda_1`.
    pub delta_prime: f64,
    pub epsilon: f64,
    pub mu: usize,
    pub ell: usize,
    pub psi_inf: f64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            m: 7,
            big_m: 1.0,
            big_n: 1.0,
            big_k: 1.0,
            tau: 0.5,
            delta: 0.5,
            delta_prime: 0.01,
            epsilon: 1.0,
            mu: 1,
            ell: 1,
            psi_inf: 1.0,
        }
    }
}

impl EstimateParams {
    /// Structural constraints relative to the equation order `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        let bad = |m: String| Err(Error::precondition(m));
        if self.m < 2 {
            return bad(format!("m = {} must be >= 2", self.m));
        }
        for (name, v) in [
            ("M", self.big_m),
            ("N", self.big_n),
            ("K", self.big_k),
            ("tau", self.tau),
            ("delta", self.delta),
            ("delta_prime", self.delta_prime),
            ("epsilon", self.epsilon),
            ("psi_inf", self.psi_inf),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.tau >= 1.0 {
            return bad(format!("tau = {} must lie in (0, 1)", self.tau));
        }
        if self.delta > 1.0 {
            return bad(format!("delta = {} must be <= 1", self.delta));
        }
        if k >= 2 && !(1 <= self.ell && self.ell < k) {
            return bad(format!("ell = {} must satisfy 1 <= ell < k = {k}", self.ell));
        }
        if k >= 2 && !(1 <= self.mu && self.mu < k) {
            return bad(format!("mu = {} must satisfy 1 <= mu <= k - 1 = {}", self.mu, k - 1));
        }
        Ok(())
    }
}
