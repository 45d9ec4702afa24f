use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{binomial, check_sample, for_each_combination, EXACT_LABELINGS_LIMIT};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// U of the first sample.
    pub u_statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub method: PValueMethod,
    /// `u_statistic / (n * m)`.
    pub a12: f64,
}

/// Midranks (1-based, ties averaged) of `values`, doubled so they stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = alloc::vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end+1 share the rank (start + end + 2) / 2.
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Midranks of `values` (1-based, ties get the average of their positions).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    doubled_midranks(values).into_iter().map(|r| r as f64 / 2.0).collect()
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
///
/// With `C(n+m, n) <= 200_000` the p-value is exact: every assignment of the
/// pooled midranks to the two groups is enumerated and the labelings whose U
/// is at least as far from `nm/2` as the observed one are counted. Larger
/// samples use the normal approximation with tie-corrected variance and a
/// continuity correction of 0.5.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);

    // 2U = 2R - n(n+1); deviations are measured on the doubled scale.
    let offset = (n * (n + 1)) as i64;
    let nm = (n * m) as i64;
    let rank_sum: u64 = ranks[..n].iter().sum();
    let u2 = rank_sum as i64 - offset;
    let u_statistic = u2 as f64 / 2.0;
    let a12 = u_statistic / (n * m) as f64;

    let labelings = binomial((n + m) as u64, n as u64);
    let (p_value, method) = match labelings {
        Some(total) if total <= EXACT_LABELINGS_LIMIT => {
            let observed = (u2 - nm).abs();
            // Enumerate the smaller group; the deviation is symmetric in the two groups.
            let (k, k_offset) = if n <= m {
                (n, offset)
            } else {
                (m, (m * (m + 1)) as i64)
            };
            let mut extreme = 0u64;
            for_each_combination(n + m, k, |idx| {
                let s: u64 = idx.iter().map(|&i| ranks[i]).sum();
                if (s as i64 - k_offset - nm).abs() >= observed {
                    extreme += 1;
                }
            });
            (extreme as f64 / total as f64, PValueMethod::Exact)
        }
        _ => (normal_p(&ranks, n, m, u_statistic), PValueMethod::NormalApproximation),
    };

    Ok(TestResult {
        u_statistic,
        p_value: p_value.clamp(0.0, 1.0),
        method,
        a12,
    })
}

/// Normal-approximation two-sided p-value for the U of the first group.
pub(crate) fn normal_p(doubled_ranks: &[u64], n: usize, m: usize, u: f64) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let mut sorted = doubled_ranks.to_vec();
    sorted.sort_unstable();
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let variance = nf * mf / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if !(variance > 0.0) {
        return 1.0;
    }
    let z = ((u - nf * mf / 2.0).abs() - 0.5).max(0.0) / libm::sqrt(variance);
    libm::erfc(z / core::f64::consts::SQRT_2).min(1.0)
}

/// Test-only access to the approximation on small samples.
#[doc(hidden)]
pub fn normal_approximation_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let r: u64 = ranks[..a.len()].iter().sum();
    let u = (r as f64 - (a.len() * (a.len() + 1)) as f64) / 2.0;
    Ok(normal_p(&ranks, a.len(), b.len(), u))
}
