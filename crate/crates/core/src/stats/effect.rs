use crate::Result;

/// Vargha-Delaney Â12: probability that a draw from `a` beats a draw from `b`,
/// ties counted half. Computed by direct pairwise counting.
pub fn vargha_delaney_a12(a: &[f64], b: &[f64]) -> Result<f64> {
    super::check_sample("a", a)?;
    super::check_sample("b", b)?;
    let mut wins = 0u64;
    let mut ties = 0u64;
    for x in a {
        for y in b {
            if x > y {
                wins += 1;
            } else if x == y {
                ties += 1;
            }
        }
    }
    Ok((wins as f64 + 0.5 * ties as f64) / (a.len() as f64 * b.len() as f64))
}
