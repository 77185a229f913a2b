//! The test function G at a converged solution: the gradient of G at its
//! discrete maximum shrinks like h, and the trace inequality holds pointwise.

use hklab::harness::EstimateParams;
use hklab::solver::{manufacture_exact, monitor, newton_solve, ChiModel, CosineProduct, NewtonOptions, TorusField, TorusGrid};

fn main() -> hklab::Result<()> {
    let chi = ChiModel::constant(1.0, 0.5);
    let params = EstimateParams { m: 7, big_m: 1.0, big_n: 1.0, ..Default::default() };
    let exact = CosineProduct::new(1, 0.02);
    println!("   N         h   G_max   |grad G| at argmax   trace margin");
    for big_n in [16, 32, 64, 128] {
        let grid = TorusGrid::new(1, big_n)?;
        let rhs = manufacture_exact(&exact, grid, &chi, 1, 0.1, 1.0)?;
        let (u, _) = newton_solve(&TorusField::zeros(grid), &chi, &rhs, 1, &NewtonOptions::default())?;
        let r = monitor(&u, &chi, 1, &params)?;
        println!(
            "{big_n:4} {:9.5} {:7.4} {:20.5} {:14.3e}",
            r.h, r.g_max, r.g_argmax_gradient_norm, r.trace_margin_min
        );
    }
    Ok(())
}
