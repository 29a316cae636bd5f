//! Verification tools: competitive ratios against ERM, lemma oracles,
//! self-concordance checks, finite differences and initial-error decay.

mod decay;
mod finite_diff;
pub mod lemmas;
mod ratio;
mod unbiased;

pub use decay::{initial_error_decay_probe, DecayAtScale, DecayReport};
pub use finite_diff::{finite_diff_check, population_gradient_check, sample_gradient_check};
pub use lemmas::{
    check_hessian_bound, check_lemma1, check_lemma2, check_self_concordance_bound, random_probes, ProbeOutcome,
    SuiteReport,
};
pub use ratio::{
    compare_arms, competitive_ratio, rate_table, trend_fraction, write_ratio_csv, ArmSummary, ErmArm, Estimator, Fit,
    RatioReport, SgdArm, StreamingArm,
};
pub use unbiased::unbiasedness_error;
