//! Grid refinement for a smooth solution that is not a trigonometric
//! polynomial: the error decays spectrally.

use hklab::solver::{refinement_study, ChiModel, ExpCosine, ManufacturedProblem, NewtonOptions};

fn main() -> hklab::Result<()> {
    for (n, k) in [(1, 1), (2, 2)] {
        let exact = ExpCosine { n, amplitude: 0.01 };
        let problem = ManufacturedProblem {
            exact: &exact,
            k,
            chi: ChiModel::constant(1.0, 0.5),
            beta: 0.2,
            gamma: 1.0,
            options: NewtonOptions::default(),
        };
        let grids: &[usize] = if n == 1 { &[8, 16, 32, 64] } else { &[8, 16] };
        println!("n = {n}, k = {k}");
        for row in refinement_study(&problem, grids)? {
            println!(
                "  N = {:3}  error {:.3e}  residual {:.1e}  iterations {}  order {}",
                row.points_per_axis,
                row.error_inf,
                row.residual_inf,
                row.iterations,
                row.observed_order.map_or("-".into(), |o| format!("{o:.1}"))
            );
        }
    }
    Ok(())
}
