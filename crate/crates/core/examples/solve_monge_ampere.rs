//! Manufactured complex Monge-Ampere problem (n = 2, k = 2) with a
//! gradient-dependent right-hand side, solved by damped Newton.
//!
//! `cargo run --release --example solve_monge_ampere [N]`

use hklab::solver::{manufacture_exact, newton_solve, ChiModel, CosineProduct, ExactSolution, NewtonOptions, TorusField, TorusGrid};

fn main() -> hklab::Result<()> {
    let big_n = std::env::args().nth(1).map_or(Ok(16), |s| s.parse()).expect("N must be an integer");
    let grid = TorusGrid::new(2, big_n)?;
    let chi = ChiModel::constant(1.0, 0.5);
    let exact = CosineProduct::new(2, 0.05);
    let rhs = manufacture_exact(&exact, grid, &chi, 2, 0.1, 1.0)?;
    let (u, rep) = newton_solve(&TorusField::zeros(grid), &chi, &rhs, 2, &NewtonOptions::default())?;
    print!("{}", rep.history_csv());
    println!("termination {:?}, |u - u*| = {:.2e}", rep.termination, u.max_abs_diff(&exact.sample(grid)?)?);
    println!("r_(j+1) / r_j^2: {:.3?}", rep.quadratic_ratios());
    Ok(())
}
