//! Damped Newton iteration with a Krylov inner solve.
//!
//! The linearization of `F(u) = sigma_k(g) - psi(z, Du, u)` is
//! `J v = tr(P(g) v_{z zbar}) + (chi'(u) F_trace - gamma) v - 2 beta Re<Du, Dv>`
//! with `P(g) = d sigma_k / d g` and `F_trace = tr P(g)`. It is solved by
//! BiCGStab preconditioned with the inverse of the constant-coefficient
//! operator obtained by averaging `P` and the zeroth-order coefficient.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::TorusField;
use super::krylov::bicgstab;
use super::model::{ChiModel, RhsModel};
use super::monitor::{monitor_state, MonitorReport};
use super::spectral::Spectral;
use super::state::GridState;
use crate::error::{Error, Result};
use crate::harness::EstimateParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    /// Stop once `|F(u)|_inf <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    /// The line search fails once the step drops below this.
    pub min_step: f64,
    /// Relative cone margin: `sigma_m(lambda) > cone_margin * sigma_m(|lambda|)`.
    pub cone_margin: f64,
    /// Trial iterates need `psi > psi_min` everywhere.
    pub psi_min: f64,
    /// Floor of the relative tolerance of the inner solve.
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    /// Project corrections to zero mean (needed when `gamma = 0`).
    pub mean_zero_gauge: bool,
    /// Constants of the test function `G` evaluated along the iteration.
    #[serde(skip)]
    pub monitor: EstimateParams,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            backtrack: 0.5,
            min_step: 1e-12,
            cone_margin: super::DEFAULT_CONE_MARGIN,
            psi_min: 0.0,
            linear_tol: 1e-13,
            linear_max_iter: 400,
            mean_zero_gauge: false,
            monitor: EstimateParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual_inf: f64,
    /// Accepted step length; 0 for the initial guess.
    pub step: f64,
    pub linear_iterations: usize,
    pub linear_residual: f64,
    pub min_sigma_margin: f64,
    pub lambda1_max: f64,
    #[serde(rename = "G_max")]
    pub g_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual_inf: f64,
    /// Minimum of `sigma_m(lambda(g))`, `m <= k`, over the grid and all accepted iterates.
    pub min_sigma_margin: f64,
    pub lambda1_max: f64,
    #[serde(rename = "G_max")]
    pub g_max: f64,
    #[serde(rename = "G_argmax_gradient_norm")]
    pub g_argmax_gradient_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    pub history: Vec<IterationRecord>,
    /// Final monitor evaluation.
    pub monitor: MonitorReport,
    /// `|u - u*|_inf` when an exact solution is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_vs_exact: Option<f64>,
}

impl SolveReport {
    /// `r_{j+1} / r_j^2` for consecutive accepted iterates with `r_j > 0`.
    pub fn quadratic_ratios(&self) -> Vec<f64> {
        self.history
            .windows(2)
            .filter(|w| w[0].residual_inf > 0.0)
            .map(|w| w[1].residual_inf / (w[0].residual_inf * w[0].residual_inf))
            .collect()
    }

    /// Per-iteration CSV: `iter,residual,min_sigma_margin,lambda1_max,G_max`.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iter,residual,min_sigma_margin,lambda1_max,G_max\n");
        for r in &self.history {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.iteration, r.residual_inf, r.min_sigma_margin, r.lambda1_max, r.g_max
            ));
        }
        s
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Linearized operator at one iterate.
struct Linearization<'a> {
    spectral: &'a Spectral,
    n: usize,
    /// `P(g)` row-major per point.
    p: Vec<Complex64>,
    /// Zeroth-order coefficient `chi' F_trace - gamma`.
    c: Vec<f64>,
    du: &'a [Vec<Complex64>],
    beta: f64,
    /// Inverse symbol of the averaged operator per Fourier mode.
    inverse_symbol: Vec<f64>,
    mean_zero: bool,
}

impl<'a> Linearization<'a> {
    fn new(spectral: &'a Spectral, state: &'a GridState, rhs: &RhsModel, mean_zero: bool) -> Self {
        let n = state.n;
        let len = state.len();
        let per_point: Vec<(Vec<Complex64>, f64)> = (0..len)
            .into_par_iter()
            .map(|q| {
                let p = state.derivative_matrix(q);
                let trace: f64 = (0..n).map(|a| p[a * n + a].re).sum();
                (p, state.chi_slope[q] * trace - rhs.gamma)
            })
            .collect();
        let mut p = Vec::with_capacity(n * n * len);
        let mut c = Vec::with_capacity(len);
        for (m, ci) in per_point {
            p.extend(m);
            c.push(ci);
        }
        let mut p_mean = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, z) in p.iter().enumerate() {
            p_mean[i % (n * n)] += z;
        }
        p_mean.iter_mut().for_each(|z| *z /= len as f64);
        let c_mean = c.iter().sum::<f64>() / len as f64;

        let grid = *spectral.grid();
        let mut symbol: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|q| {
                let idx = grid.multi_index(q);
                let mut s = c_mean;
                for a in 0..n {
                    for b in 0..n {
                        // Symbol of the (b, a) entry of the complex Hessian.
                        let sba = if a == b {
                            Complex64::new(
                                -0.25 * (spectral.wavenumber_sq(idx[2 * a]) + spectral.wavenumber_sq(idx[2 * a + 1])),
                                0.0,
                            )
                        } else {
                            let (kxb, kyb) = (spectral.wavenumber(idx[2 * b]), spectral.wavenumber(idx[2 * b + 1]));
                            let (kxa, kya) = (spectral.wavenumber(idx[2 * a]), spectral.wavenumber(idx[2 * a + 1]));
                            Complex64::new(-0.25 * (kxb * kxa + kyb * kya), -0.25 * (kxb * kya - kyb * kxa))
                        };
                        s += (p_mean[a * n + b] * sba).re;
                    }
                }
                s
            })
            .collect();
        let scale = symbol.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1.0);
        symbol
            .iter_mut()
            .for_each(|s| *s = if s.abs() <= 1e-14 * scale { 0.0 } else { 1.0 / *s });
        Self {
            spectral,
            n,
            p,
            c,
            du: &state.du,
            beta: rhs.beta,
            inverse_symbol: symbol,
            mean_zero,
        }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let hat = self.spectral.forward(v);
        let hess = self.spectral.complex_hessian_hat(&hat);
        let dv = if self.beta != 0.0 {
            self.spectral.complex_gradient_hat(&hat)
        } else {
            Vec::new()
        };
        (0..v.len())
            .into_par_iter()
            .map(|q| {
                let p = &self.p[q * n * n..(q + 1) * n * n];
                let mut out = self.c[q] * v[q];
                for a in 0..n {
                    for b in 0..n {
                        out += (p[a * n + b] * hess.entry(q, b, a)).re;
                    }
                }
                if self.beta != 0.0 {
                    let inner: f64 = (0..n).map(|a| (self.du[a][q] * dv[a][q].conj()).re).sum();
                    out -= 2.0 * self.beta * inner;
                }
                out
            })
            .collect()
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut hat = self.spectral.forward(r);
        hat.par_iter_mut().zip(&self.inverse_symbol).for_each(|(z, s)| *z *= s);
        let mut out: Vec<f64> = self.spectral.inverse(hat).into_iter().map(|z| z.re).collect();
        if self.mean_zero {
            let m = out.iter().sum::<f64>() / out.len() as f64;
            out.iter_mut().for_each(|x| *x -= m);
        }
        out
    }
}

struct Iterate {
    u: TorusField,
    state: GridState,
    residual: Vec<f64>,
    residual_inf: f64,
}

fn evaluate(spectral: &Spectral, u: TorusField, chi: &ChiModel, rhs: &RhsModel, k: usize, opts: &NewtonOptions) -> Result<Iterate> {
    let state = GridState::compute(spectral, &u, chi, k, opts.cone_margin)?;
    let psi = state.psi(rhs, &u);
    if let Some(p) = psi.iter().position(|&x| x <= opts.psi_min) {
        return Err(Error::precondition(format!(
            "psi = {} <= psi_min = {} at grid point {p}",
            psi[p], opts.psi_min
        )));
    }
    let residual: Vec<f64> = state.sigma_k.iter().zip(&psi).map(|(s, q)| s - q).collect();
    let residual_inf = inf_norm(&residual);
    Ok(Iterate { u, state, residual, residual_inf })
}

fn record(it: &Iterate, iteration: usize, step: f64, lin: (usize, f64), params: &EstimateParams) -> IterationRecord {
    let mon = monitor_state(&it.state, &it.u, params);
    IterationRecord {
        iteration,
        residual_inf: it.residual_inf,
        step,
        linear_iterations: lin.0,
        linear_residual: lin.1,
        min_sigma_margin: it.state.min_sigma_margin,
        lambda1_max: it.state.lambda1_max,
        g_max: mon.g_max,
    }
}

/// Solves `sigma_k(chi(u) I + u_{z zbar}) = psi(z, Du, u)` from `u0`.
///
/// Fails if `u0` is outside the cone (with margin) or `psi(u0) <= psi_min`.
/// Non-convergence is reported, not raised.
pub fn newton_solve(
    u0: &TorusField,
    chi: &ChiModel,
    rhs: &RhsModel,
    k: usize,
    opts: &NewtonOptions,
) -> Result<(TorusField, SolveReport)> {
    chi.validate()?;
    rhs.validate()?;
    if rhs.p.grid() != u0.grid() {
        return Err(Error::domain("rhs and initial guess live on different grids"));
    }
    if rhs.gamma <= 0.0 && !opts.mean_zero_gauge {
        return Err(Error::precondition("gamma = 0 needs the mean-zero gauge"));
    }
    if !(opts.backtrack > 0.0 && opts.backtrack < 1.0) {
        return Err(Error::Config(format!("backtrack factor must lie in (0, 1), got {}", opts.backtrack)));
    }
    let params = EstimateParams {
        epsilon: chi.epsilon,
        ..opts.monitor.clone()
    };
    let spectral = Spectral::new(*u0.grid());
    let mut u_start = u0.clone();
    if opts.mean_zero_gauge {
        u_start.project_mean_zero();
    }
    let mut cur = evaluate(&spectral, u_start, chi, rhs, k, opts)?;
    let mut history = vec![record(&cur, 0, 0.0, (0, 0.0), &params)];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    loop {
        if cur.residual_inf <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        let lin = Linearization::new(&spectral, &cur.state, rhs, opts.mean_zero_gauge);
        let rhs_vec: Vec<f64> = cur.residual.iter().map(|r| -r).collect();
        let forcing = (0.1 * cur.residual_inf).min(1e-4).max(opts.linear_tol);
        let (mut v, kout) = bicgstab(|x| lin.apply(x), |x| lin.precondition(x), &rhs_vec, forcing, opts.linear_max_iter);
        if opts.mean_zero_gauge {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
        drop(lin);
        let mut t = 1.0;
        let accepted = loop {
            if t < opts.min_step {
                break None;
            }
            let trial = cur.u.axpy(t, &v).and_then(|u| evaluate(&spectral, u, chi, rhs, k, opts));
            match trial {
                Ok(next) if next.residual_inf < cur.residual_inf => break Some(next),
                Ok(_) | Err(Error::ConeViolation { .. }) | Err(Error::Precondition(_)) | Err(Error::Domain(_)) => {
                    t *= opts.backtrack
                }
                Err(e) => return Err(e),
            }
        };
        match accepted {
            Some(next) => {
                iterations += 1;
                cur = next;
                if opts.mean_zero_gauge {
                    cur.u.mean_zero = true;
                }
                history.push(record(&cur, iterations, t, (kout.iterations, kout.relative_residual), &params));
            }
            None => {
                termination = Termination::LineSearchFailed;
                break;
            }
        }
    }
    let monitor = monitor_state(&cur.state, &cur.u, &params);
    let report = SolveReport {
        iterations,
        final_residual_inf: cur.residual_inf,
        min_sigma_margin: history.iter().map(|r| r.min_sigma_margin).fold(f64::INFINITY, f64::min),
        lambda1_max: cur.state.lambda1_max,
        g_max: monitor.g_max,
        g_argmax_gradient_norm: monitor.g_argmax_gradient_norm,
        converged: termination == Termination::Converged,
        termination,
        history,
        monitor,
        error_vs_exact: None,
    };
    Ok((cur.u, report))
}
