//! Pointwise evaluation of `g = chi I + u_{z zbar}`: eigenvalues, `sigma_k`,
//! cone membership and the derivative matrix of `sigma_k`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::TorusField;
use super::model::{ChiModel, RhsModel};
use super::spectral::{HermitianField, Spectral};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::symfun::elementary_all;

/// Cone violations list at most this many grid points.
pub const MAX_REPORTED_POINTS: usize = 1024;

/// Everything the residual, the Jacobian and the monitor need from one `u`.
#[derive(Debug, Clone)]
pub struct GridState {
    pub k: usize,
    pub n: usize,
    pub hessian: HermitianField,
    /// `u_{z_a}` for each complex direction `a`.
    pub du: Vec<Vec<Complex64>>,
    /// `|Du|^2 = sum_a |u_{z_a}|^2 = |grad u|^2 / 4`.
    pub du_sq: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi_slope: Vec<f64>,
    /// Eigenvalues of `g`, `n` per point, descending.
    pub lambdas: Vec<f64>,
    pub sigma_k: Vec<f64>,
    /// Minimum over points and `1 <= m <= k` of `sigma_m(lambda(g))`.
    pub min_sigma_margin: f64,
    pub lambda1_max: f64,
}

pub(crate) fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// `sum_{j<k} (-1)^j sigma_{k-1-j}(G) G^j`, the matrix `d sigma_k / d G`,
/// so that `d sigma_k(G)[H] = tr(P H)`. `sigmas` holds `sigma_0..sigma_{k-1}`.
pub fn sigma_derivative_matrix(g: &[Complex64], n: usize, sigmas: &[f64], k: usize) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let coef = |j: usize| if j % 2 == 0 { sigmas[k - 1 - j] } else { -sigmas[k - 1 - j] };
    let mut q = vec![zero; n * n];
    for a in 0..n {
        q[a * n + a] = Complex64::new(coef(k - 1), 0.0);
    }
    for j in (0..k - 1).rev() {
        let mut next = vec![zero; n * n];
        for a in 0..n {
            for b in 0..n {
                next[a * n + b] = (0..n).map(|c| g[a * n + c] * q[c * n + b]).sum();
            }
            next[a * n + a] += coef(j);
        }
        q = next;
    }
    q
}

/// `tr(P H)` for row-major `n x n` matrices.
pub fn trace_product(p: &[Complex64], h: &[Complex64], n: usize) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            s += p[a * n + b] * h[b * n + a];
        }
    }
    s.re
}

impl GridState {
    /// Fails with [`Error::ConeViolation`] unless every point satisfies
    /// `sigma_m(lambda) > margin * sigma_m(|lambda|)` for `1 <= m <= k`.
    pub fn compute(spectral: &Spectral, u: &TorusField, chi: &ChiModel, k: usize, margin: f64) -> Result<Self> {
        let grid = *spectral.grid();
        if u.grid() != &grid {
            return Err(Error::domain("field and transform grids differ"));
        }
        let n = grid.n();
        check_order(n, k)?;
        let hat = spectral.forward(u.values());
        let hessian = spectral.complex_hessian_hat(&hat);
        let du = spectral.complex_gradient_hat(&hat);
        drop(hat);
        let uv = u.values();
        let du_sq: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|p| du.iter().map(|d| d[p].norm_sqr()).sum())
            .collect();
        let chi_v: Vec<f64> = uv.par_iter().map(|&x| chi.value(x)).collect();
        let chi_slope = uv.par_iter().map(|&x| chi.slope(x)).collect();

        let len = grid.len();
        let mut lambdas = vec![0.0; n * len];
        let mut sigma_k = vec![0.0; len];
        let mut min_m = vec![0.0; len];
        let mut admissible = vec![true; len];
        lambdas
            .par_chunks_mut(n)
            .zip(sigma_k.par_iter_mut())
            .zip(min_m.par_iter_mut())
            .zip(admissible.par_iter_mut())
            .enumerate()
            .for_each(|(p, (((lam_out, sk), mm), ok))| {
                let mut g = [Complex64::new(0.0, 0.0); 9];
                for a in 0..n {
                    for b in 0..n {
                        g[a * n + b] = hessian.entry(p, a, b);
                    }
                    g[a * n + a] += chi_v[p];
                }
                let lam = hermitian_eigenvalues(&g[..n * n], n);
                let s = elementary_all(&lam, k);
                let abs: Vec<f64> = lam.iter().map(|x| x.abs()).collect();
                let sa = elementary_all(&abs, k);
                *ok = (1..=k).all(|m| s[m] > margin * sa[m]);
                *mm = s[1..].iter().copied().fold(f64::INFINITY, f64::min);
                *sk = s[k];
                lam_out.copy_from_slice(&lam);
            });
        let bad: Vec<usize> = admissible
            .iter()
            .enumerate()
            .filter(|(_, ok)| !**ok)
            .map(|(p, _)| p)
            .take(MAX_REPORTED_POINTS)
            .collect();
        if !bad.is_empty() {
            return Err(Error::ConeViolation { points: bad });
        }
        let min_sigma_margin = min_m.iter().copied().fold(f64::INFINITY, f64::min);
        let lambda1_max = lambdas.chunks(n).map(|l| l[0]).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            k,
            n,
            hessian,
            du,
            du_sq,
            chi: chi_v,
            chi_slope,
            lambdas,
            sigma_k,
            min_sigma_margin,
            lambda1_max,
        })
    }

    pub fn len(&self) -> usize {
        self.sigma_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_k.is_empty()
    }

    pub fn lambda(&self, p: usize) -> &[f64] {
        &self.lambdas[p * self.n..(p + 1) * self.n]
    }

    /// `g = chi I + u_{z zbar}` at point `p`, row-major.
    pub fn g_matrix(&self, p: usize) -> Vec<Complex64> {
        let mut g = self.hessian.matrix_at(p);
        for a in 0..self.n {
            g[a * self.n + a] += self.chi[p];
        }
        g
    }

    /// `d sigma_k / d g` at point `p`.
    pub fn derivative_matrix(&self, p: usize) -> Vec<Complex64> {
        let s = elementary_all(self.lambda(p), self.k);
        sigma_derivative_matrix(&self.g_matrix(p), self.n, &s, self.k)
    }

    pub fn psi(&self, rhs: &RhsModel, u: &TorusField) -> Vec<f64> {
        let uv = u.values();
        (0..self.len()).into_par_iter().map(|p| rhs.psi_at(p, self.du_sq[p], uv[p])).collect()
    }

    pub fn residual(&self, rhs: &RhsModel, u: &TorusField) -> Vec<f64> {
        let psi = self.psi(rhs, u);
        self.sigma_k.par_iter().zip(psi).map(|(s, q)| s - q).collect()
    }
}

/// `sigma_k(lambda(g)) - psi(z, Du, u)` at every grid point. Requires
/// `g` in the open cone `Gamma_k` everywhere.
pub fn residual(u: &TorusField, chi: &ChiModel, rhs: &RhsModel, k: usize) -> Result<TorusField> {
    rhs.validate()?;
    if rhs.p.grid() != u.grid() {
        return Err(Error::domain("rhs and field grids differ"));
    }
    let state = GridState::compute(&Spectral::new(*u.grid()), u, chi, k, 0.0)?;
    TorusField::new(*u.grid(), state.residual(rhs, u))
}
