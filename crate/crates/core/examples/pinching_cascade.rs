//! Case analysis on the eigenvalue ratios and the constants measured inside
//! the pinched-gap argument.

use hklab::harness::{lemma3_subchecks, pinching_cascade};
use hklab::symfun::{elementary, Spectrum};

fn main() -> hklab::Result<()> {
    let deltas = [0.5, 0.25];
    for l in [vec![8.0, 6.0, 0.05, 0.01], vec![8.0, 6.0, 3.0, 0.5], vec![8.0, 1.0, 0.5, 0.5]] {
        let lambda = Spectrum::new(l)?;
        let sk = elementary(lambda.values(), 3);
        println!("{:?}: {:?}", lambda.values(), pinching_cascade(&lambda, 3, sk, &deltas)?);
    }
    let pinched = Spectrum::new(vec![1.0, 0.8, 0.004, 0.001])?;
    for (k, mu) in [(2, 1), (3, 2)] {
        println!("k={k} mu={mu}: {:?}", lemma3_subchecks(&pinched, k, mu)?);
    }
    Ok(())
}
