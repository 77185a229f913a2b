//! Randomized sweeps of the concavity and Cauchy-Schwarz inequalities.

use hklab::harness::lemmas::Inequality;
use hklab::harness::sweep::{sweep, SweepConfig};
use hklab::harness::{EstimateParams, SAMPLE_TOL};

fn main() -> hklab::Result<()> {
    let params = EstimateParams { delta: 0.5, ..Default::default() };
    for ineq in Inequality::ALL {
        let (n, k) = (4, 3);
        let p = EstimateParams { mu: 2, ..params.clone() };
        let out = sweep(&SweepConfig::new(ineq, n, k, 20_000, 1, p), SAMPLE_TOL)?;
        println!(
            "{:16} n={n} k={k}: {} samples, {} violations, min slack/scale {:.3e} (sample {})",
            ineq.name(),
            out.samples,
            out.violation_count,
            out.min_normalized(),
            out.worst.sample_id
        );
    }
    Ok(())
}
