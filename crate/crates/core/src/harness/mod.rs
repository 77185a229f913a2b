//! Pointwise evaluation of the structural inequalities behind the second-order
//! estimate, with randomized sweeps and adversarial search.

pub mod data;
pub mod lemmas;
pub mod report;
pub mod search;
pub mod subchecks;
pub mod suites;
pub mod sweep;
pub mod terms;

pub use data::{EstimateParams, ThirdOrderData};
pub use lemmas::{
    corollary17_slack, is_m_admissible, Inequality, k_threshold, lemma1_slack, lemma2_slack, lemma3_slack, pinching_holds,
};
pub use report::{read_jsonl, tolerance_scale, write_jsonl, SlackReport, SAMPLE_TOL, SEARCH_TOL};
pub use subchecks::{lemma3_subchecks, pinching_cascade, CascadeDiagnosis};
pub use terms::{p_power_sum, power_quotient, terms_abcde, TermContext, TermsAbcde};
pub use search::{adversarial_search, delta_prime_threshold, worst_case_at, DeltaPrimeThreshold, SearchConfig};
pub use sweep::{sweep, SweepConfig, SweepOutcome};
pub use suites::{run_suite, Suite, SuiteConfig, SuiteOutcome, SuiteSummary};
