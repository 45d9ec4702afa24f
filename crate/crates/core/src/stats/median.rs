use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::check_sample;
use crate::{Error, Result};

pub const DEFAULT_CI_LEVEL: f64 = 0.95;

/// Sample median; the mean of the two middle values for even sizes.
pub fn median(values: &[f64]) -> Result<f64> {
    check_sample("s", values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(sorted_median(&v))
}

pub(crate) fn sorted_median(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Distribution-free interval for a median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianCi {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    /// 1-based order statistics used for the bounds.
    pub lo_rank: usize,
    pub hi_rank: usize,
    /// Exact coverage of the chosen rank pair.
    pub achieved_level: f64,
    /// Set when even the full range `(1, n)` falls short of the requested level.
    pub below_nominal: bool,
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`, summed in log space.
fn binomial_half_cdf(n: usize, k: usize) -> f64 {
    let ln2n = n as f64 * core::f64::consts::LN_2;
    let mut ln_choose = 0.0;
    let mut total = 0.0;
    for i in 0..=k.min(n) {
        if i > 0 {
            ln_choose += libm::log((n - i + 1) as f64) - libm::log(i as f64);
        }
        total += libm::exp(ln_choose - ln2n);
    }
    total.min(1.0)
}

/// Coverage of `[X_(k), X_(n+1-k)]` for the population median.
fn rank_pair_coverage(n: usize, k: usize) -> f64 {
    1.0 - 2.0 * binomial_half_cdf(n, k - 1).min(0.5)
}

/// Order-statistic confidence interval for the median.
///
/// Picks the symmetric rank pair `(k, n + 1 - k)` with the largest `k` whose
/// Binomial(n, 1/2) coverage is at least `level`. The interval is therefore
/// conservative. When no pair reaches `level`, the full range is returned
/// with `below_nominal` set.
pub fn median_ci(values: &[f64], level: f64) -> Result<MedianCi> {
    check_sample("s", values)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::arg(alloc::format!("confidence level {level} not in (0, 1)")));
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();

    let mut best = None;
    let mut k = 1;
    while 2 * k <= n + 1 {
        let cov = rank_pair_coverage(n, k);
        if cov >= level {
            best = Some((k, cov));
            k += 1;
        } else {
            break;
        }
    }
    let (k, achieved_level, below_nominal) = match best {
        Some((k, cov)) => (k, cov, false),
        None => (1, rank_pair_coverage(n, 1), true),
    };
    Ok(MedianCi {
        median: sorted_median(&v),
        lo: v[k - 1],
        hi: v[n - k],
        lo_rank: k,
        hi_rank: n + 1 - k,
        achieved_level,
        below_nominal,
    })
}
