//! Small dense eigenproblems: cyclic Jacobi for real symmetric matrices and
//! Hermitian matrices (through their real `2n x 2n` embedding), with closed
//! forms for `n <= 2`.

use num_complex::Complex64;

pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 30;

/// Eigen-decomposition of a real symmetric matrix stored row-major.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `j` of the row-major `n x n` matrix is the eigenvector for `values[j]`.
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.vectors[r * self.n + j]).collect()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[p * n + q] * a[p * n + q];
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// `JACOBI_TOL` times the matrix norm, or `JACOBI_MAX_SWEEPS` sweeps.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= JACOBI_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + col] = v[r * n + src];
        }
    }
    SymmetricEigen { n, values, vectors }
}

/// Eigenvalues (descending) of a Hermitian matrix given row-major.
pub fn hermitian_eigenvalues(h: &[Complex64], n: usize) -> Vec<f64> {
    assert_eq!(h.len(), n * n, "matrix must be n x n");
    match n {
        1 => vec![h[0].re],
        2 => {
            let a = h[0].re;
            let d = h[3].re;
            let b = h[1].norm();
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mean + rad, mean - rad]
        }
        _ => {
            // [[A, -B], [B, A]] has the spectrum of A + iB, each value twice.
            let m = 2 * n;
            let mut e = vec![0.0; m * m];
            for r in 0..n {
                for c in 0..n {
                    let z = h[r * n + c];
                    e[r * m + c] = z.re;
                    e[(r + n) * m + (c + n)] = z.re;
                    e[r * m + (c + n)] = -z.im;
                    e[(r + n) * m + c] = z.im;
                }
            }
            let all = symmetric_eigen(&e, m).values;
            (0..n).map(|j| 0.5 * (all[2 * j] + all[2 * j + 1])).collect()
        }
    }
}

/// Smallest eigenvalue and a unit eigenvector of a real symmetric matrix.
pub fn min_eigenpair(matrix: &[f64], n: usize) -> (f64, Vec<f64>) {
    let e = symmetric_eigen(matrix, n);
    (e.values[n - 1], e.vector(n - 1))
}
