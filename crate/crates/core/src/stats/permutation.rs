use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::median::sorted_median;
use super::{binomial, check_sample, for_each_combination, EXACT_LABELINGS_LIMIT};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    /// Observed `|median(a) - median(b)|`.
    pub statistic: f64,
    pub p_value: f64,
    pub method: PermutationMethod,
    /// Relabelings evaluated.
    pub relabelings: u64,
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_median(&v)
}

fn split_stat(pooled: &[f64], chosen: &[bool]) -> f64 {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (v, &c) in pooled.iter().zip(chosen) {
        if c {
            a.push(*v)
        } else {
            b.push(*v)
        }
    }
    (median_of(&a) - median_of(&b)).abs()
}

/// Two-sided permutation test on the difference of medians.
///
/// Exact when `C(n+m, n) <= 200_000`; otherwise `iterations` random
/// relabelings (at least 100) with `p = (1 + extreme) / (1 + iterations)`.
pub fn permutation_test_median(a: &[f64], b: &[f64], iterations: u64, rng_seed: u64) -> Result<PermutationResult> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let observed = (median_of(a) - median_of(b)).abs();
    let tol = 1e-9 * observed.abs().max(1.0);
    let is_extreme = |s: f64| s >= observed - tol;

    match binomial((n + m) as u64, n as u64) {
        Some(total) if total <= EXACT_LABELINGS_LIMIT => {
            let mut extreme = 0u64;
            let mut chosen = alloc::vec![false; n + m];
            for_each_combination(n + m, n, |idx| {
                chosen.iter_mut().for_each(|c| *c = false);
                for &i in idx {
                    chosen[i] = true;
                }
                if is_extreme(split_stat(&pooled, &chosen)) {
                    extreme += 1;
                }
            });
            Ok(PermutationResult {
                statistic: observed,
                p_value: extreme as f64 / total as f64,
                method: PermutationMethod::Exact,
                relabelings: total,
            })
        }
        _ => {
            if iterations < 100 {
                return Err(Error::arg(alloc::format!(
                    "monte-carlo permutation test needs at least 100 iterations, got {iterations}"
                )));
            }
            monte_carlo(&pooled, n, observed, iterations, rng_seed, is_extreme)
        }
    }
}

fn monte_carlo(
    pooled: &[f64],
    n: usize,
    observed: f64,
    iterations: u64,
    rng_seed: u64,
    is_extreme: impl Fn(f64) -> bool,
) -> Result<PermutationResult> {
    let mut rng = rng_from_seed(rng_seed);
    let mut shuffled = pooled.to_vec();
    let mut extreme = 0u64;
    for _ in 0..iterations {
        shuffled.shuffle(&mut rng);
        let s = (median_of(&shuffled[..n]) - median_of(&shuffled[n..])).abs();
        if is_extreme(s) {
            extreme += 1;
        }
    }
    Ok(PermutationResult {
        statistic: observed,
        p_value: (1 + extreme) as f64 / (1 + iterations) as f64,
        method: PermutationMethod::MonteCarlo,
        relabelings: iterations,
    })
}

/// Monte-Carlo variant regardless of sample size, for cross-checking the exact path.
pub fn permutation_test_median_monte_carlo(a: &[f64], b: &[f64], iterations: u64, rng_seed: u64) -> Result<PermutationResult> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    if iterations < 100 {
        return Err(Error::arg("monte-carlo permutation test needs at least 100 iterations"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let observed = (median_of(a) - median_of(b)).abs();
    let tol = 1e-9 * observed.abs().max(1.0);
    monte_carlo(&pooled, a.len(), observed, iterations, rng_seed, |s| s >= observed - tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_statistic_everywhere() {
        let r = permutation_test_median(&[5.0, 5.0], &[5.0, 5.0], 0, 1).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_by_two_split() {
        let r = permutation_test_median(&[0.0, 0.0], &[1.0, 1.0], 0, 1).unwrap();
        assert!((r.p_value - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.relabelings, 6);
    }

    #[test]
    fn large_samples_need_enough_iterations() {
        let a: Vec<f64> = (0..20).map(f64::from).collect();
        let b: Vec<f64> = (0..20).map(|i| f64::from(i) + 3.0).collect();
        assert!(permutation_test_median(&a, &b, 99, 1).is_err());
        let r = permutation_test_median(&a, &b, 2000, 1).unwrap();
        assert_eq!(r.relabelings, 2000);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        assert_eq!(r, permutation_test_median(&a, &b, 2000, 1).unwrap());
    }
}
