//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's symmetric-function code.

#![allow(dead_code)]

use num_complex::Complex64;

/// `sigma_k` by summing products over all `k`-subsets of `values`.
pub fn sigma_subsets(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).map(|i| values[i]).product::<f64>())
        .sum()
}

/// `sigma_k` of `values` with the listed indices removed; negative `k` gives 0.
pub fn sigma_without(values: &[f64], k: isize, drop: &[usize]) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let kept: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, v)| *v)
        .collect();
    sigma_subsets(&kept, k as usize)
}

/// Same sum with `|values|`, the natural magnitude of `sigma_k`.
pub fn sigma_abs_without(values: &[f64], k: isize, drop: &[usize]) -> f64 {
    let a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sigma_without(&a, k, drop)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut d = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        if a[piv][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != c {
            a.swap(piv, c);
            d = -d;
        }
        d *= a[c][c];
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                let v = a[c][j];
                a[r][j] -= f * v;
            }
        }
    }
    d
}

/// `sigma_k` of the eigenvalues of a Hermitian matrix: the sum of its
/// principal `k x k` minors.
pub fn sigma_matrix(h: &[Vec<Complex64>], k: usize) -> f64 {
    let n = h.len();
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| {
            let idx: Vec<usize> = (0..n).filter(|&i| m >> i & 1 == 1).collect();
            let sub = idx.iter().map(|&r| idx.iter().map(|&c| h[r][c]).collect()).collect();
            det(sub).re
        })
        .sum()
}

/// `diag(lambda) + s w`.
pub fn perturbed(lambda: &[f64], w: &[Vec<Complex64>], s: f64) -> Vec<Vec<Complex64>> {
    let n = lambda.len();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let base = if r == c { lambda[r] } else { 0.0 };
                    Complex64::new(base, 0.0) + w[r][c] * s
                })
                .collect()
        })
        .collect()
}

/// Workspace preset directory.
pub fn preset(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}
