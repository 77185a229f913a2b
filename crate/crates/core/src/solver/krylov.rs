//! Right-preconditioned BiCGStab for the Newton correction.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    /// `|b - A x|_2 / |b|_2` as tracked by the recurrence.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`, applying the preconditioner on the right
/// (`A K^{-1} y = b`, `x = K^{-1} y`).
pub fn bicgstab(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> (Vec<f64>, KrylovOutcome) {
    let len = b.len();
    let mut x = vec![0.0; len];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        let out = KrylovOutcome { iterations: 0, relative_residual: 0.0, converged: true };
        return (x, out);
    }
    let mut r = b.to_vec();
    let r_hat = b.to_vec();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || omega == 0.0 {
            return (x, KrylovOutcome { iterations: it - 1, relative_residual: rel, converged: false });
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        p.par_iter_mut()
            .zip(&r)
            .zip(&v)
            .for_each(|((p, r), v)| *p = r + beta * (*p - omega * v));
        let y = precondition(&p);
        v = apply(&y);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.par_iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        x.par_iter_mut().zip(&y).for_each(|(x, y)| *x += alpha * y);
        rel = norm(&s) / b_norm;
        if rel <= rel_tol {
            return (x, KrylovOutcome { iterations: it, relative_residual: rel, converged: true });
        }
        let z = precondition(&s);
        let t = apply(&z);
        omega = dot(&t, &s) / dot(&t, &t);
        x.par_iter_mut().zip(&z).for_each(|(x, z)| *x += omega * z);
        r = s.par_iter().zip(&t).map(|(s, t)| s - omega * t).collect();
        rel = norm(&r) / b_norm;
        if rel <= rel_tol {
            return (x, KrylovOutcome { iterations: it, relative_residual: rel, converged: true });
        }
    }
    (x, KrylovOutcome { iterations: max_iter, relative_residual: rel, converged: false })
}
