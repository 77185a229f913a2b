//! Draws from the Garding cone, including boundary-biased samples, and the
//! shift that makes a spectrum positive.

use hklab::cone::{in_cone, sample_indexed, shift_to_positive, ConeSampleConfig};
use hklab::symfun::elementary;

fn main() -> hklab::Result<()> {
    let (n, k) = (5, 3);
    let plain = ConeSampleConfig::new(n, k, 1.0, 42);
    let edge = plain.clone().boundary_biased();
    for draw in 0..4 {
        for (name, cfg) in [("rejection", &plain), ("boundary", &edge)] {
            let l = sample_indexed(cfg, draw)?;
            println!(
                "{name:9} draw {draw}: sigma_{k} = {:9.3e}  in cone: {}  lambda = {:.3?}",
                elementary(l.values(), k as isize),
                in_cone(&l, k),
                l.values()
            );
        }
    }
    let l = sample_indexed(&ConeSampleConfig::new(n, 4, 1.0, 7).boundary_biased(), 0)?;
    let (shifted, k0) = shift_to_positive(&l, 3)?;
    println!("shift K0 = {k0:.4}: {:.3?} -> {:.3?}", l.values(), shifted.values());
    Ok(())
}
