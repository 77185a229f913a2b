//! Analytic exact solutions, manufactured right-hand sides built from their
//! analytic derivatives, and grid refinement studies.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{TorusField, TorusGrid};
use super::model::{ChiModel, RhsModel};
use super::newton::{newton_solve, NewtonOptions};
use super::spectral::complex_from_real_hessian;
use super::state::{check_order, MAX_REPORTED_POINTS};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::symfun::elementary_all;

/// A smooth periodic function with analytic first and second derivatives.
pub trait ExactSolution: Send + Sync {
    /// Complex dimension.
    fn n(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Real gradient, axes `(x_1, y_1, ..., x_n, y_n)`.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Real `2n x 2n` Hessian, row-major.
    fn real_hessian(&self, x: &[f64]) -> Vec<f64>;
    /// Largest frequency along any axis for trigonometric polynomials.
    fn band_limit(&self) -> Option<usize>;

    fn sample(&self, grid: TorusGrid) -> Result<TorusField> {
        TorusField::from_fn(grid, |x| self.value(x))
    }
}

/// `a cos(2 pi f x_1) cos(2 pi f y_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineProduct {
    pub n: usize,
    pub amplitude: f64,
    pub frequency: usize,
}

impl CosineProduct {
    pub fn new(n: usize, amplitude: f64) -> Self {
        Self { n, amplitude, frequency: 1 }
    }

    fn parts(&self, x: &[f64]) -> (f64, f64, f64, f64, f64) {
        let w = 2.0 * PI * self.frequency as f64;
        let (s, t) = (x[0], x[2 * self.n - 1]);
        ((w * s).cos(), (w * s).sin(), (w * t).cos(), (w * t).sin(), w)
    }
}

impl ExactSolution for CosineProduct {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (cs, _, ct, _, _) = self.parts(x);
        self.amplitude * cs * ct
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (cs, ss, ct, st, w) = self.parts(x);
        let mut g = vec![0.0; 2 * self.n];
        g[0] = -self.amplitude * w * ss * ct;
        g[2 * self.n - 1] = -self.amplitude * w * cs * st;
        g
    }

    fn real_hessian(&self, x: &[f64]) -> Vec<f64> {
        let (cs, ss, ct, st, w) = self.parts(x);
        let d = 2 * self.n;
        let last = d - 1;
        let a = self.amplitude * w * w;
        let mut h = vec![0.0; d * d];
        h[0] = -a * cs * ct;
        h[last * d + last] = -a * cs * ct;
        h[last] = a * ss * st;
        h[last * d] = a * ss * st;
        h
    }

    fn band_limit(&self) -> Option<usize> {
        Some(self.frequency)
    }
}

/// `a exp(cos(2 pi x_1))`: smooth but not a trigonometric polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpCosine {
    pub n: usize,
    pub amplitude: f64,
}

impl ExactSolution for ExpCosine {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * (2.0 * PI * x[0]).cos().exp()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let w = 2.0 * PI;
        let mut g = vec![0.0; 2 * self.n];
        g[0] = -w * (w * x[0]).sin() * self.value(x);
        g
    }

    fn real_hessian(&self, x: &[f64]) -> Vec<f64> {
        let w = 2.0 * PI;
        let d = 2 * self.n;
        let (c, s) = ((w * x[0]).cos(), (w * x[0]).sin());
        let mut h = vec![0.0; d * d];
        h[0] = w * w * (s * s - c) * self.value(x);
        h
    }

    fn band_limit(&self) -> Option<usize> {
        None
    }
}

/// Right-hand side built from the analytic derivatives of `exact`, so the
/// discrete solution differs from `exact` only by discretization error.
pub fn manufacture_exact(
    exact: &dyn ExactSolution,
    grid: TorusGrid,
    chi: &ChiModel,
    k: usize,
    beta: f64,
    gamma: f64,
) -> Result<RhsModel> {
    chi.validate()?;
    let n = grid.n();
    if exact.n() != n {
        return Err(Error::Config(format!("exact solution has n = {}, grid has n = {n}", exact.n())));
    }
    check_order(n, k)?;
    let rows: Vec<(f64, f64, f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let x = grid.coords(p);
            let u = exact.value(&x);
            let grad = exact.gradient(&x);
            let mut g = complex_from_real_hessian(&exact.real_hessian(&x), n);
            for a in 0..n {
                g[a * n + a] += chi.value(u);
            }
            let lam = hermitian_eigenvalues(&g, n);
            let s = elementary_all(&lam, k);
            let sa = elementary_all(&lam.iter().map(|l| l.abs()).collect::<Vec<_>>(), k);
            let ok = (1..=k).all(|m| s[m] > super::DEFAULT_CONE_MARGIN * sa[m]);
            (u, s[k], 0.25 * grad.iter().map(|v| v * v).sum::<f64>(), ok)
        })
        .collect();
    let bad: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.3)
        .map(|(p, _)| p)
        .take(MAX_REPORTED_POINTS)
        .collect();
    if !bad.is_empty() {
        return Err(Error::ConeViolation { points: bad });
    }
    let rhs = RhsModel {
        p: TorusField::new(grid, rows.iter().map(|r| r.1).collect())?,
        beta,
        gamma,
        q: TorusField::new(grid, rows.iter().map(|r| r.2).collect())?,
        r: TorusField::new(grid, rows.iter().map(|r| r.0).collect())?,
    };
    rhs.validate()?;
    Ok(rhs)
}

/// A manufactured problem that can be posed on any grid.
pub struct ManufacturedProblem<'a> {
    pub exact: &'a dyn ExactSolution,
    pub k: usize,
    pub chi: ChiModel,
    pub beta: f64,
    pub gamma: f64,
    pub options: NewtonOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    #[serde(rename = "N")]
    pub points_per_axis: usize,
    pub error_inf: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `log2(e_prev / e) / log2(N / N_prev)` against the previous row.
    pub observed_order: Option<f64>,
}

/// Solves `problem` from `u = 0` on each grid and reports `|u - u*|_inf`.
pub fn refinement_study(problem: &ManufacturedProblem<'_>, grids: &[usize]) -> Result<Vec<RefinementRow>> {
    if grids.is_empty() || grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("refinement grids must be increasing".into()));
    }
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(grids.len());
    for &big_n in grids {
        let grid = TorusGrid::new(problem.exact.n(), big_n)?;
        let rhs = manufacture_exact(problem.exact, grid, &problem.chi, problem.k, problem.beta, problem.gamma)?;
        let (u, report) = newton_solve(&TorusField::zeros(grid), &problem.chi, &rhs, problem.k, &problem.options)?;
        let error_inf = u.max_abs_diff(&problem.exact.sample(grid)?)?;
        let observed_order = rows.last().and_then(|prev| {
            (prev.error_inf > 0.0 && error_inf > 0.0).then(|| {
                (prev.error_inf / error_inf).log2() / (big_n as f64 / prev.points_per_axis as f64).log2()
            })
        });
        rows.push(RefinementRow {
            points_per_axis: big_n,
            error_inf,
            residual_inf: report.final_residual_inf,
            iterations: report.iterations,
            converged: report.converged,
            observed_order,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::spectral::Spectral;

    #[test]
    fn analytic_and_spectral_hessians_agree() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let exact = CosineProduct { n: 2, amplitude: 0.3, frequency: 2 };
        let h = Spectral::new(grid).complex_hessian(&exact.sample(grid).unwrap());
        for p in (0..grid.len()).step_by(37) {
            let want = complex_from_real_hessian(&exact.real_hessian(&grid.coords(p)), 2);
            let got = h.matrix_at(p);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn exp_cosine_derivatives_match_differences() {
        let e = ExpCosine { n: 1, amplitude: 0.7 };
        let x = [0.13, 0.4];
        let h = 1e-5;
        let fd = (e.value(&[x[0] + h, x[1]]) - e.value(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((fd - e.gradient(&x)[0]).abs() < 1e-6);
        let fd2 = (e.gradient(&[x[0] + h, x[1]])[0] - e.gradient(&[x[0] - h, x[1]])[0]) / (2.0 * h);
        assert!((fd2 - e.real_hessian(&x)[0]).abs() < 1e-5);
    }
}
