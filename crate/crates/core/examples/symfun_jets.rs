//! sigma_k, its first and second derivatives at a diagonal matrix, and the
//! exact identities they satisfy.

use hklab::symfun::{jet, second_form_contraction, sigma, Spectrum};
use num_complex::Complex64;

fn main() -> hklab::Result<()> {
    let lambda = Spectrum::new(vec![3.0, 1.5, 0.5, -0.25])?;
    let k = 2;
    let j = jet(&lambda, k)?;
    println!("lambda = {:?}", lambda.values());
    println!("sigma_{k} = {}", sigma(&lambda, k)?);
    println!("grad (sigma_k^pp) = {:?}", j.grad);
    println!("trace F = {}, (n - k + 1) sigma_(k-1) = {}", j.trace(), 3.0 * sigma(&lambda, k - 1)?);

    let euler: f64 = lambda.values().iter().zip(&j.grad).map(|(l, g)| l * g).sum();
    println!("Euler: sum lambda_p sigma_k^pp = {euler}, k sigma_k = {}", k as f64 * j.value);

    // Second derivative along a Hermitian direction with off-diagonal entries.
    let z = Complex64::new(0.0, 0.0);
    let mut w = vec![vec![z; 4]; 4];
    w[0][0] = Complex64::new(1.0, 0.0);
    w[1][1] = Complex64::new(-0.5, 0.0);
    w[0][2] = Complex64::new(0.3, 0.4);
    w[2][0] = w[0][2].conj();
    println!("second form along w = {}", second_form_contraction(&j, &w)?);
    Ok(())
}
