//! Nonparametric statistics for comparing fuzzers over many trials.
//!
//! Nothing here assumes a distribution for the per-trial outcomes: the
//! Mann-Whitney U test ranks pooled samples, Â12 counts pairwise wins,
//! median intervals come from order statistics, and the permutation test
//! relabels the pooled data.

mod auc;
mod band;
mod combinations;
mod effect;
mod mann_whitney;
mod median;
mod permutation;

pub use auc::{crash_auc, CrashTimeSeries};
pub use band::{aggregate_band, Band, BandRow};
pub use combinations::{binomial, for_each_combination};
pub use effect::vargha_delaney_a12;
pub use mann_whitney::{mann_whitney_u, midranks, normal_approximation_p, PValueMethod, TestResult};
pub use median::{median, median_ci, MedianCi, DEFAULT_CI_LEVEL};
pub use permutation::{
    permutation_test_median, permutation_test_median_monte_carlo, PermutationMethod, PermutationResult,
};

/// Largest number of labelings enumerated before falling back to an approximation.
pub const EXACT_LABELINGS_LIMIT: u64 = 200_000;

use crate::{Error, Result};

pub(crate) fn check_sample(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::arg(alloc::format!("sample {name} is empty")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::arg(alloc::format!("sample {name} contains NaN")));
    }
    Ok(())
}
