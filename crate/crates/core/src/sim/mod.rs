//! Synthetic curve data, the replicated finite-sample study and the Monte
//! Carlo checks of the limit laws.
//!
//! All randomness is derived from explicit seeds: replication `r` at design
//! point `i` uses `base_seed + r * 10^6 + i`, so results do not depend on the
//! number of worker threads.

mod asymptotic;
mod curves;
mod output;
mod study;

pub use asymptotic::{
    run_asymptotic_suite, AsymptoticRow, Claim, ExtrapolationConfig, MaxExceedanceConfig,
    OrderStatConfig, Rule, S2Config, SuiteConfig, TailIndexConfig,
};
pub use curves::{default_y_values, generate_curves, generate_responses, perturbed_frechet_model};
pub use output::{
    write_asymptotics, write_errors_hist, write_median_replication, write_replications,
    write_study_checks, write_study_csvs, write_summary_ci,
};
pub use study::{
    run_study, AlphaEstimates, AlphaSummary, CurveInterval, ExperimentConfig, GridSpec,
    HistogramRow, ReplicationReport, SelectedPair, StudyCheck, StudyOutput, StudySummary,
};

/// Seed for replication `replication` and stream (design point) `stream`.
pub fn derive_seed(base: u64, replication: usize, stream: usize) -> u64 {
    base.wrapping_add((replication as u64).wrapping_mul(1_000_000))
        .wrapping_add(stream as u64)
}

/// Floats in CSV outputs: 12 significant digits, scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}
