/// `C(n, k)`, or `None` if it overflows `u64`.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Calls `f` with every `k`-subset of `0..n` as an increasing index slice,
/// in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: alloc::vec::Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Rightmost position that can still advance.
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), Some(20));
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(60, 30), Some(118_264_581_564_861_424));
        assert_eq!(binomial(200, 100), None);
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn enumerates_all_subsets() {
        let mut n = 0;
        let mut last = alloc::vec::Vec::new();
        for_each_combination(6, 3, |c| {
            n += 1;
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            last = c.to_vec();
        });
        assert_eq!(n, 20);
        assert_eq!(last, [3, 4, 5]);
        let mut empty = 0;
        for_each_combination(4, 0, |c| {
            assert!(c.is_empty());
            empty += 1
        });
        assert_eq!(empty, 1);
    }
}
