mod common;

use common::{sigma_subsets, sigma_without};
use hklab::cone::{in_cone, sample, shift_to_positive, ConeSampleConfig};
use hklab::harness::lemmas::{corollary17_slack, k_threshold, lemma3_slack, Inequality};
use hklab::harness::sweep::{draw_sample, sweep, SweepConfig};
use hklab::harness::{
    adversarial_search, delta_prime_threshold, pinching_cascade, read_jsonl, worst_case_at, write_jsonl,
    CascadeDiagnosis, EstimateParams, SearchConfig, ThirdOrderData, SAMPLE_TOL, SEARCH_TOL,
};
use hklab::symfun::Spectrum;
use hklab::Error;

#[test]
fn violations_replay_from_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let c = SweepConfig::new(Inequality::Corollary17, 4, 3, 300, 21, EstimateParams::default());
    let out = sweep(&c, SAMPLE_TOL).unwrap();
    let path = dir.path().join("r.jsonl");
    let mut reports = out.violations.clone();
    reports.push(out.worst.clone());
    write_jsonl(std::fs::File::create(&path).unwrap(), &reports).unwrap();
    let back = read_jsonl(&path).unwrap();
    assert_eq!(back, reports);
    let worst = back.last().unwrap();
    let again = draw_sample(&c, worst.sample_id).unwrap();
    assert_eq!(again.slack.to_bits(), worst.slack.to_bits());
    assert_eq!(again.data().unwrap(), worst.data().unwrap());
}

#[test]
fn search_finds_violations_outside_the_hypotheses() {
    // With delta' = 0.9 the gap hypothesis is vacuous and the estimate fails.
    let params = EstimateParams { delta_prime: 0.9, ..Default::default() };
    let rep = adversarial_search(Inequality::Lemma3, &SearchConfig::new(4, 2, 64, 3, params.clone())).unwrap();
    assert!(!rep.passes(SEARCH_TOL), "{}", rep.normalized());
    // The recorded worst case replays exactly.
    let lambda = Spectrum::new(rep.lambda.clone()).unwrap();
    let data = rep.data().unwrap();
    let replay = lemma3_slack(&lambda, rep.k, &data, &rep.params).unwrap();
    assert_eq!(replay.slack.to_bits(), rep.slack.to_bits());
    // The inner minimization over t at the same spectrum cannot do better.
    let inner = worst_case_at(Inequality::Lemma3, rep.k, &lambda, &rep.params).unwrap();
    assert!((inner.normalized() - rep.normalized()).abs() <= 1e-9 * rep.normalized().abs().max(1e-12));
}

#[test]
fn delta_prime_threshold_brackets_the_failure() {
    let c = SearchConfig::new(4, 2, 32, 8, EstimateParams::default());
    let t = delta_prime_threshold(&c, 1e-2, 1.0, 4).unwrap();
    let (lo, hi) = (t.holds_up_to.unwrap(), t.fails_from.unwrap());
    assert!(lo < hi && lo >= 0.01 && hi <= 1.0);
    assert!(t.worst_failure.as_ref().is_some_and(|r| !r.passes(SEARCH_TOL)));
    assert!(matches!(delta_prime_threshold(&c, 0.5, 0.1, 2), Err(Error::Config(_))));
}

#[test]
fn cone_samples_satisfy_the_definition() {
    for (n, k) in [(3, 1), (4, 2), (5, 3), (6, 6)] {
        for seed in 0..50 {
            let s = sample(&ConeSampleConfig::new(n, k, 2.0, seed)).unwrap();
            assert!((1..=k).all(|m| sigma_subsets(s.values(), m) > 0.0), "{:?}", s.values());
            assert!(in_cone(&s, k));
        }
    }
}

#[test]
fn shift_makes_spectra_positive() {
    let s = Spectrum::new(vec![3.0, 1.0, -0.5]).unwrap();
    // Needs Gamma_{k+1}: sigma_2(3, 1, -0.5) = 1 > 0.
    let (t, k0) = shift_to_positive(&s, 1).unwrap();
    assert!(shift_to_positive(&s, 2).is_err());
    assert!(k0 > 0.5 && k0 < 0.51);
    assert!(t.values().iter().all(|&x| x > 0.0));
    // Positive spectra only receive the relative margin.
    let (_, small) = shift_to_positive(&Spectrum::new(vec![2.0, 1.0]).unwrap(), 2).unwrap();
    assert!((small - 2e-8).abs() < 1e-20);
}

#[test]
fn cascade_finds_the_first_gap() {
    let deltas = [0.5, 0.25];
    // lambda_2 < delta_2 lambda_1: gap at j = 2.
    let l = Spectrum::new(vec![4.0, 1.0, 0.5]).unwrap();
    let sk = sigma_subsets(l.values(), 3);
    assert!(matches!(pinching_cascade(&l, 3, sk, &deltas).unwrap(), CascadeDiagnosis::Gap { j: 2, mu: 1 }));
    // Pinched through k: the bound on lambda_1 applies.
    let l = Spectrum::new(vec![2.0, 1.5, 1.2]).unwrap();
    let sk = sigma_subsets(l.values(), 3);
    match pinching_cascade(&l, 3, sk, &deltas).unwrap() {
        CascadeDiagnosis::AllPinched { lambda1_bound, .. } => assert!(lambda1_bound >= 2.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn corollary_requires_k_strictly_above_threshold() {
    let l = Spectrum::new(vec![2.0, 1.0, 1.0]).unwrap();
    let psi = sigma_subsets(l.values(), 2);
    let t = k_threshold(2, 0.5, psi);
    assert!((t - (1.0 - 1.0 + 1.0 / 0.5) / psi).abs() < 1e-15);
    let data = ThirdOrderData::zeros(3);
    assert!(matches!(corollary17_slack(&l, 2, t, 0, &data, psi, 0.5), Err(Error::Precondition(_))));
    assert!(corollary17_slack(&l, 2, t * (1.0 + 1e-9), 0, &data, psi, 0.5).is_ok());
    // psi_inf above sigma_k violates the hypothesis sigma_k >= psi_inf.
    assert!(corollary17_slack(&l, 2, 10.0, 0, &data, psi * 1.01, 0.5).is_err());
    assert_eq!(sigma_without(l.values(), 1, &[0]), 2.0);
}
