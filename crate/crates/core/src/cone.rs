//! Garding cones `Gamma_k = { lambda : sigma_1, ..., sigma_k > 0 }`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::symfun::{elementary_all, Spectrum};

/// Draws allowed per sample before giving up.
pub const REJECTION_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStrategy {
    /// Centered Gaussian of the configured scale conditioned on `Gamma_k`.
    Rejection,
    /// A rejection sample whose smallest entry is pushed toward the cone
    /// boundary until `0 < sigma_k < 0.1 scale^k`.
    BoundaryBiased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSampleConfig {
    pub n: usize,
    pub k: usize,
    pub scale: f64,
    pub seed: u64,
    pub strategy: SampleStrategy,
}

impl ConeSampleConfig {
    pub fn new(n: usize, k: usize, scale: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            scale,
            seed,
            strategy: SampleStrategy::Rejection,
        }
    }

    pub fn boundary_biased(mut self) -> Self {
        self.strategy = SampleStrategy::BoundaryBiased;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!("cone samples need n >= 2, got {}", self.n)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::domain(format!(
                "need 1 <= k <= n, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::domain(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Strict membership test on raw values. Boundary points are outside.
pub fn in_cone_values(values: &[f64], k: usize) -> bool {
    let e = elementary_all(values, k);
    e[1..].iter().all(|&s| s > 0.0)
}

/// `true` iff `sigma_m(lambda) > 0` for all `m = 1..=k`.
pub fn in_cone(lambda: &Spectrum, k: usize) -> bool {
    in_cone_values(lambda.values(), k)
}

/// Draw index 0 of the configured sampler.
pub fn sample(config: &ConeSampleConfig) -> Result<Spectrum> {
    sample_indexed(config, 0)
}

/// Deterministic sample keyed by `(config.seed, draw)`.
pub fn sample_indexed(config: &ConeSampleConfig, draw: u64) -> Result<Spectrum> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, draw);
    match config.strategy {
        SampleStrategy::Rejection => rejection(config, &mut rng),
        SampleStrategy::BoundaryBiased => {
            for _ in 0..64 {
                let base = rejection(config, &mut rng)?;
                if let Some(l) = push_to_boundary(config, base, &mut rng) {
                    return Ok(l);
                }
            }
            Err(Error::Sampling(
                "could not place a boundary-biased sample inside the cone".into(),
            ))
        }
    }
}

fn rejection<R: Rng>(config: &ConeSampleConfig, rng: &mut R) -> Result<Spectrum> {
    let mut v = vec![0.0; config.n];
    for _ in 0..REJECTION_BUDGET {
        for x in v.iter_mut() {
            *x = config.scale * rng::normal(rng);
        }
        if in_cone_values(&v, config.k) {
            return Spectrum::new(v);
        }
    }
    Err(Error::Sampling(format!(
        "rejection budget of {REJECTION_BUDGET} draws exhausted for n = {}, k = {}",
        config.n, config.k
    )))
}

/// Lower the smallest entry along `-e_n`. The line meets the (convex) cone in
/// a half-line `x > b`; `b` is found by bisection on membership and the final
/// entry is placed so that `sigma_k`, affine in that entry, lands in
/// `(0, 0.1 scale^k)`.
fn push_to_boundary<R: Rng>(config: &ConeSampleConfig, base: Spectrum, rng: &mut R) -> Option<Spectrum> {
    let k = config.k;
    let target_cap = 0.1 * config.scale.powi(k as i32);
    let mut v = base.values().to_vec();
    let last = v.len() - 1;
    let at = |v: &mut Vec<f64>, x: f64| -> bool {
        v[last] = x;
        in_cone_values(v, k)
    };
    let inside = v[last];
    let rest: f64 = v[..last].iter().sum();
    // sigma_1 <= 0 below this point
    let mut lo = -rest - config.scale;
    let mut hi = inside;
    if at(&mut v, lo) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(&mut v, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    let boundary = hi;
    // slope of sigma_k in the last entry
    let slope = elementary_all(&v[..last], k - 1)[k - 1];
    let fraction: f64 = rng.gen_range(0.05..0.95);
    let x = if slope > 0.0 {
        (boundary + fraction * target_cap / slope).min(inside)
    } else {
        boundary + fraction * (inside - boundary)
    };
    v[last] = x;
    let s = elementary_all(&v, k)[k];
    if in_cone_values(&v, k) && s > 0.0 && s < target_cap {
        Spectrum::new(v).ok()
    } else {
        None
    }
}

/// Remark-1 shift: `lambda + K0 (1, ..., 1)` with all entries positive.
///
/// `K0 = max(0, -lambda_n) + 1e-8 max(1, |lambda|_inf)`. Requires
/// `lambda in Gamma_{k+1}`; when `k = n` membership in `Gamma_n` is checked.
pub fn shift_to_positive(lambda: &Spectrum, k: usize) -> Result<(Spectrum, f64)> {
    let order = (k + 1).min(lambda.n());
    if k == 0 || !in_cone(lambda, order) {
        return Err(Error::precondition(format!(
            "spectrum {:?} is not in Gamma_{}",
            lambda.values(),
            order
        )));
    }
    let margin = 1e-8 * lambda.max_abs().max(1.0);
    let k0 = (-lambda.smallest()).max(0.0) + margin;
    Ok((lambda.shifted(k0), k0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::{elementary_excluding, sigma};

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(in_cone(&spec(&[1.0, 1.0, 1.0]), 3));
        assert!(!in_cone(&spec(&[2.0, 2.0, -1.0]), 2));
        assert!(in_cone(&spec(&[2.0, 2.0, -0.5]), 2));
    }

    #[test]
    fn positive_orthant_for_k_equals_n() {
        for seed in 0..20 {
            let l = sample(&ConeSampleConfig::new(3, 3, 1.0, seed)).unwrap();
            assert!(l.values().iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn samples_are_deterministic() {
        let c = ConeSampleConfig::new(4, 2, 1.0, 42);
        let a = sample(&c).unwrap();
        assert!(in_cone(&a, 2));
        assert_eq!(a, sample(&c).unwrap());
        assert_ne!(a, sample_indexed(&c, 1).unwrap());
    }

    #[test]
    fn boundary_biased_samples_are_near_the_boundary() {
        let c = ConeSampleConfig::new(3, 2, 1.5, 9).boundary_biased();
        for draw in 0..200 {
            let l = sample_indexed(&c, draw).unwrap();
            let s2 = sigma(&l, 2).unwrap();
            assert!(in_cone(&l, 2));
            assert!(s2 > 0.0 && s2 < 0.1 * 1.5f64.powi(2), "sigma_2 = {s2}");
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(sample(&ConeSampleConfig::new(3, 4, 1.0, 0)).is_err());
        assert!(sample(&ConeSampleConfig::new(3, 2, 0.0, 0)).is_err());
        assert!(sample(&ConeSampleConfig::new(1, 1, 1.0, 0)).is_err());
    }

    #[test]
    fn shift_examples() {
        let (s, k0) = shift_to_positive(&spec(&[3.0, 2.0, 1.0]), 1).unwrap();
        assert!(k0 > 0.0 && k0 <= 1e-8 * 3.0 + 1e-20);
        assert!((s.values()[0] - 3.0).abs() < 1e-7);

        let l = spec(&[5.0, 1.0, -0.3]);
        assert!(in_cone(&l, 2));
        let (s, k0) = shift_to_positive(&l, 1).unwrap();
        assert!((k0 - 0.3).abs() < 1e-7);
        assert!(s.smallest() > 0.0);
        assert!((s.values()[0] - 5.3).abs() < 1e-7);

        let (s, _) = shift_to_positive(&spec(&[1.0, 1.0, 0.0]), 1).unwrap();
        assert!(s.smallest() > 0.0);

        // (2,2,-1) has sigma_2 = 0
        assert!(matches!(
            shift_to_positive(&spec(&[2.0, 2.0, -1.0]), 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn nested_cones_and_newton_maclaurin_on_samples() {
        for (n, k) in [(3, 2), (4, 3), (5, 3), (5, 4)] {
            let c = ConeSampleConfig::new(n, k, 1.0, 17);
            for draw in 0..500 {
                let l = sample_indexed(&c, draw).unwrap();
                assert!(in_cone(&l, k - 1));
                let v = l.values();
                let bound = 1e-10 * (1.0 + l.max_abs()).powi(2 * k as i32 - 2);
                for p in 0..n {
                    for q in 0..n {
                        if p == q {
                            continue;
                        }
                        let mu = k as isize;
                        let a = elementary_excluding(v, mu - 1, &[p, q]);
                        let b = elementary_excluding(v, mu, &[p, q]);
                        let c = elementary_excluding(v, mu - 2, &[p, q]);
                        assert!(a * a - b * c >= -bound);
                    }
                }
            }
        }
    }
}
