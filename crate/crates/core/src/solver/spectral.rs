//! Fourier differentiation on a [`TorusGrid`].
//!
//! Each complex derivative is one inverse transform: the symbol of
//! `u_{z_a}` or `u_{z_a zbar_b}` splits into real-even parts, so the real and
//! imaginary parts of the inverse transform are exactly the two real fields
//! that make up the complex derivative. Odd-order factors drop the Nyquist
//! mode; `d^2/dx^2` keeps it.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::grid::{TorusField, TorusGrid};
use crate::error::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pointwise Hermitian `n x n` matrices, stored as their upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    n: usize,
    /// `upper[upper_index(a, b)][p]` is entry `(a, b)`, `a <= b`, at point `p`.
    upper: Vec<Vec<Complex64>>,
}

pub fn upper_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a <= b && b < n);
    a * n - a * (a + 1) / 2 + b
}

impl HermitianField {
    pub fn zeros(n: usize, points: usize) -> Self {
        Self {
            n,
            upper: vec![vec![ZERO; points]; n * (n + 1) / 2],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.upper[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, p: usize, a: usize, b: usize) -> Complex64 {
        if a <= b {
            self.upper[upper_index(self.n, a, b)][p]
        } else {
            self.upper[upper_index(self.n, b, a)][p].conj()
        }
    }

    /// Row-major `n x n` matrix at point `p`.
    pub fn matrix_at(&self, p: usize) -> Vec<Complex64> {
        let n = self.n;
        let mut m = vec![ZERO; n * n];
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = self.entry(p, a, b);
            }
        }
        m
    }
}

/// Transform plans and wavenumber tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    /// `2 pi f`, zero at the Nyquist frequency.
    k_odd: Vec<f64>,
    /// `(2 pi f)^2`, including the Nyquist frequency.
    k_sq: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

/// Signed integer frequency of FFT bin `j` on `n` points; the Nyquist bin is `+n/2`.
pub fn frequency(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl Spectral {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let k_odd = (0..n)
            .map(|j| if j == n / 2 { 0.0 } else { 2.0 * PI * frequency(j, n) as f64 })
            .collect();
        let k_sq = (0..n).map(|j| (2.0 * PI * frequency(j, n) as f64).powi(2)).collect();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            backward: planner.plan_fft_inverse(n),
            k_odd,
            k_sq,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        const TILE: usize = 16;
        let fft = if inverse { &self.backward } else { &self.forward };
        let n = self.grid.points_per_axis();
        let scratch_len = fft.get_inplace_scratch_len();
        for axis in 0..self.grid.real_dim() {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                data.par_chunks_mut(n * 256).for_each_init(
                    || vec![ZERO; scratch_len],
                    |scratch, c| fft.process_with_scratch(c, scratch),
                );
                continue;
            }
            // Gather TILE strided lines at a time into a contiguous buffer.
            let tile = TILE.min(stride);
            let tiles_per_block = stride / tile;
            let blocks: Vec<&mut [Complex64]> = data.chunks_mut(n * stride).collect();
            blocks.into_par_iter().for_each_init(
                || (vec![ZERO; tile * n], vec![ZERO; scratch_len]),
                |(lines, scratch), block| {
                    for t in 0..tiles_per_block {
                        let s0 = t * tile;
                        for j in 0..n {
                            let row = &block[j * stride + s0..j * stride + s0 + tile];
                            for (s, z) in row.iter().enumerate() {
                                lines[s * n + j] = *z;
                            }
                        }
                        fft.process_with_scratch(lines, scratch);
                        for j in 0..n {
                            let row = &mut block[j * stride + s0..j * stride + s0 + tile];
                            for (s, z) in row.iter_mut().enumerate() {
                                *z = lines[s * n + j];
                            }
                        }
                    }
                },
            );
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.par_iter_mut().for_each(|z| *z *= scale);
        }
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut data, true);
        data
    }

    fn with_symbol(&self, hat: &[Complex64], symbol: impl Fn(&[usize]) -> Complex64 + Sync) -> Vec<Complex64> {
        let d = self.grid.real_dim();
        let n = self.grid.points_per_axis();
        let mut out = hat.to_vec();
        out.par_chunks_mut(n).enumerate().for_each(|(line, chunk)| {
            let mut idx = [0usize; 2 * super::grid::MAX_COMPLEX_DIM];
            for (a, slot) in idx.iter_mut().enumerate().take(d - 1) {
                *slot = self.grid.axis_index(line * n, a);
            }
            for (j, z) in chunk.iter_mut().enumerate() {
                idx[d - 1] = j;
                *z *= symbol(&idx[..d]);
            }
        });
        self.inverse(out)
    }

    /// Real field whose transform is `hat` times the real symbol `symbol(axis indices)`.
    pub fn apply_real_symbol(&self, values: &[f64], symbol: impl Fn(&[usize]) -> f64 + Sync) -> Vec<f64> {
        let hat = self.forward(values);
        self.with_symbol(&hat, |idx| Complex64::new(symbol(idx), 0.0))
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// `2 pi f` for bin `j`, zero at Nyquist.
    pub fn wavenumber(&self, j: usize) -> f64 {
        self.k_odd[j]
    }

    pub fn wavenumber_sq(&self, j: usize) -> f64 {
        self.k_sq[j]
    }

    /// Real partial derivative along the listed axes (repeats allowed).
    pub fn real_derivative(&self, u: &TorusField, axes: &[usize]) -> Vec<f64> {
        let mut count = [0u32; 2 * super::grid::MAX_COMPLEX_DIM];
        for &a in axes {
            count[a] += 1;
        }
        let hat = self.forward(u.values());
        self.with_symbol(&hat, |idx| {
            let mut s = Complex64::new(1.0, 0.0);
            for (a, &c) in count.iter().enumerate().filter(|(_, &c)| c > 0) {
                let j = idx[a];
                // Even powers keep the Nyquist mode, odd powers drop it.
                s *= (-self.k_sq[j]).powi((c / 2) as i32);
                if c % 2 == 1 {
                    s *= Complex64::new(0.0, self.k_odd[j]);
                }
            }
            s
        })
        .into_iter()
        .map(|z| z.re)
        .collect()
    }

    /// `u_{z_a} = (u_{x_a} - i u_{y_a}) / 2` for each `a`.
    pub fn complex_gradient_hat(&self, hat: &[Complex64]) -> Vec<Vec<Complex64>> {
        (0..self.grid.n())
            .map(|a| {
                self.with_symbol(hat, |idx| {
                    let kx = self.k_odd[idx[2 * a]];
                    let ky = self.k_odd[idx[2 * a + 1]];
                    Complex64::new(0.5 * ky, 0.5 * kx)
                })
            })
            .collect()
    }

    /// `u_{z_a zbar_b} = (u_{x_a x_b} + u_{y_a y_b})/4 + i (u_{x_a y_b} - u_{y_a x_b})/4`.
    pub fn complex_hessian_hat(&self, hat: &[Complex64]) -> HermitianField {
        let n = self.grid.n();
        let mut out = HermitianField::zeros(n, hat.len());
        let diag = |a: usize, idx: &[usize]| -0.25 * (self.k_sq[idx[2 * a]] + self.k_sq[idx[2 * a + 1]]);
        // Two real diagonal entries share one transform as real and imaginary parts.
        for a in (0..n).step_by(2) {
            let pair = a + 1 < n;
            let f = self.with_symbol(hat, |idx| {
                Complex64::new(diag(a, idx), if pair { diag(a + 1, idx) } else { 0.0 })
            });
            out.upper[upper_index(n, a, a)] = f.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
            if pair {
                out.upper[upper_index(n, a + 1, a + 1)] = f.iter().map(|z| Complex64::new(z.im, 0.0)).collect();
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                out.upper[upper_index(n, a, b)] = self.with_symbol(hat, |idx| {
                    let (kxa, kya) = (self.k_odd[idx[2 * a]], self.k_odd[idx[2 * a + 1]]);
                    let (kxb, kyb) = (self.k_odd[idx[2 * b]], self.k_odd[idx[2 * b + 1]]);
                    Complex64::new(-0.25 * (kxa * kxb + kya * kyb), -0.25 * (kxa * kyb - kya * kxb))
                });
            }
        }
        out
    }

    pub fn complex_hessian(&self, u: &TorusField) -> HermitianField {
        self.complex_hessian_hat(&self.forward(u.values()))
    }

    /// Trigonometric interpolation onto `target` (same `n`). Modes that do not
    /// fit, and the Nyquist modes of the source, are dropped.
    pub fn resample(&self, u: &TorusField, target: TorusGrid) -> Result<TorusField> {
        if target.n() != self.grid.n() {
            return Err(crate::Error::domain("resampling cannot change the complex dimension"));
        }
        let (src_n, dst_n) = (self.grid.points_per_axis(), target.points_per_axis());
        let hat = self.forward(u.values());
        let keep = src_n.min(dst_n) / 2;
        let mut out = vec![ZERO; target.len()];
        let d = self.grid.real_dim();
        for (p, z) in hat.iter().enumerate() {
            let mut dst = 0usize;
            let mut ok = true;
            for a in 0..d {
                let f = frequency(self.grid.axis_index(p, a), src_n);
                if f.unsigned_abs() as usize >= keep {
                    ok = false;
                    break;
                }
                dst = dst * dst_n + f.rem_euclid(dst_n as i64) as usize;
            }
            if ok {
                out[dst] = *z;
            }
        }
        let factor = target.len() as f64 / self.grid.len() as f64;
        out.iter_mut().for_each(|z| *z *= factor);
        let values = Spectral::new(target).inverse(out).into_iter().map(|z| z.re).collect();
        TorusField::new(target, values)
    }
}

/// Complex Hessian `u_{z_a zbar_b}` of `u` by spectral differentiation.
pub fn complex_hessian(u: &TorusField) -> HermitianField {
    Spectral::new(*u.grid()).complex_hessian(u)
}

/// Converts a real `2n x 2n` Hessian (axes `x_1, y_1, ...`) to the complex
/// Hessian `u_{z_a zbar_b}`, row-major `n x n`.
pub fn complex_from_real_hessian(real: &[f64], n: usize) -> Vec<Complex64> {
    let d = 2 * n;
    let r = |i: usize, j: usize| real[i * d + j];
    let mut m = vec![ZERO; n * n];
    for a in 0..n {
        for b in 0..n {
            let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
            m[a * n + b] = Complex64::new(0.25 * (r(xa, xb) + r(ya, yb)), 0.25 * (r(xa, yb) - r(ya, xb)));
        }
    }
    m
}
