//! Worst-case search over the spectrum with exact minimization over the
//! third-order data, and an empirical bound on the gap ratio delta'.

use hklab::harness::lemmas::Inequality;
use hklab::harness::{adversarial_search, delta_prime_threshold, EstimateParams, SearchConfig};

fn main() -> hklab::Result<()> {
    for ineq in [Inequality::Lemma1, Inequality::Corollary17, Inequality::Genesis2] {
        let rep = adversarial_search(ineq, &SearchConfig::new(4, 2, 64, 7, EstimateParams::default()))?;
        println!("{:16} worst slack/scale {:.3e} at lambda = {:.4?}", ineq.name(), rep.normalized(), rep.lambda);
    }
    let t = delta_prime_threshold(&SearchConfig::new(4, 2, 32, 3, EstimateParams::default()), 1e-2, 1.0, 5)?;
    println!("pinched-gap estimate (n=4, k=2, mu=1): holds up to delta' = {:?}, fails from {:?}", t.holds_up_to, t.fails_from);
    Ok(())
}
