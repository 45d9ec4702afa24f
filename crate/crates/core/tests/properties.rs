use fuzzeval_core::campaign::{compare, crash_count_at, Metric};
use fuzzeval_core::dedup::cmin;
use fuzzeval_core::fuzz::{mutate, CoverageProfile, CrashEvent, Edge, Frame, StackTrace, TrialRecord};
use fuzzeval_core::rng::rng_from_seed;
use fuzzeval_core::stats::{aggregate_band, crash_auc, mann_whitney_u, vargha_delaney_a12, CrashTimeSeries};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u8..12, 1..12).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn event_times() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..1000, 0..25).prop_map(|mut v| {
        v.sort_unstable();
        v.into_iter().map(|t| f64::from(t) / 100.0).collect()
    })
}

fn trial(fuzzer: &str, idx: u32, times: &[f64]) -> TrialRecord {
    TrialRecord {
        fuzzer_id: fuzzer.into(),
        target_id: "t".into(),
        seed_config_id: "s".into(),
        trial_index: idx,
        rng_seed: 0,
        deadline: 10.0,
        crashes: times
            .iter()
            .map(|&at| CrashEvent {
                at,
                input: vec![0],
                profile: CoverageProfile::from_iter([Edge(0, 1)]),
                trace: StackTrace::new(vec![Frame::new("f", 1)]),
            })
            .collect(),
        coverage_growth: vec![],
        executions: times.len() as u64 + 1,
    }
}

fn monotone(x: f64) -> f64 {
    x.powi(3) + (x / 4.0).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn a12_complementarity(a in sample(), b in sample()) {
        let ab = vargha_delaney_a12(&a, &b).unwrap();
        let ba = vargha_delaney_a12(&b, &a).unwrap();
        prop_assert!((ab + ba - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn rank_invariance(a in sample(), b in sample()) {
        let ta: Vec<f64> = a.iter().copied().map(monotone).collect();
        let tb: Vec<f64> = b.iter().copied().map(monotone).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        let t = mann_whitney_u(&ta, &tb).unwrap();
        prop_assert_eq!(r.u_statistic, t.u_statistic);
        prop_assert_eq!(r.p_value, t.p_value);
        prop_assert_eq!(vargha_delaney_a12(&a, &b).unwrap(), vargha_delaney_a12(&ta, &tb).unwrap());
    }

    #[test]
    fn u_test_ignores_sample_order(a in sample(), b in sample(), rot in 0usize..12) {
        let mut ra = a.clone();
        ra.reverse();
        let mut rb = b.clone();
        let k = rot % rb.len();
        rb.rotate_left(k);
        let r = mann_whitney_u(&a, &b).unwrap();
        let s = mann_whitney_u(&ra, &rb).unwrap();
        prop_assert_eq!(r.u_statistic, s.u_statistic);
        prop_assert!((r.p_value - s.p_value).abs() < 1e-15);
        let swapped = mann_whitney_u(&b, &a).unwrap();
        prop_assert!((r.p_value - swapped.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn cmin_preserves_coverage(profiles in prop::collection::vec(prop::collection::btree_set(0u32..40, 1..8), 1..20)) {
        let profiles: Vec<CoverageProfile> = profiles
            .iter()
            .map(|s| s.iter().map(|&e| Edge(e, e + 1)).collect())
            .collect();
        let kept = cmin(&profiles).unwrap();
        let all: std::collections::BTreeSet<Edge> = profiles.iter().flat_map(|p| p.iter().copied()).collect();
        let covered: std::collections::BTreeSet<Edge> = kept.iter().flat_map(|&i| profiles[i].iter().copied()).collect();
        prop_assert_eq!(all, covered);
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn band_ordering(trials in prop::collection::vec(event_times(), 1..12), level in 0.5f64..0.99) {
        let series: Vec<CrashTimeSeries> = trials.iter().map(|t| CrashTimeSeries::from_event_times(t).unwrap()).collect();
        let grid: Vec<f64> = (0..=20).map(|i| f64::from(i) / 2.0).collect();
        let band = aggregate_band(&series, &grid, level).unwrap();
        for r in &band.rows {
            prop_assert!(r.min <= r.ci_lo && r.ci_lo <= r.median && r.median <= r.ci_hi && r.ci_hi <= r.max, "{:?}", r);
        }
    }

    #[test]
    fn auc_monotone_under_appended_crash(times in event_times(), extra in 0u32..1000, horizon in 0u32..1500) {
        let h = f64::from(horizon) / 100.0;
        let base = CrashTimeSeries::from_event_times(&times).unwrap();
        let mut more = times.clone();
        more.push(times.last().copied().unwrap_or(0.0) + f64::from(extra) / 100.0);
        let bigger = CrashTimeSeries::from_event_times(&more).unwrap();
        prop_assert!(crash_auc(&bigger, h).unwrap() >= crash_auc(&base, h).unwrap() - 1e-9);
    }

    #[test]
    fn auc_of_simultaneous_crashes(k in 1u64..20, t in 1u32..1000, extra in 0u32..1000) {
        let t = f64::from(t) / 100.0;
        let h = t + f64::from(extra) / 100.0;
        let s = CrashTimeSeries::new(vec![(0.0, 0), (t, k)]).unwrap();
        let kf = k as f64;
        prop_assert!((crash_auc(&s, h).unwrap() - (kf * (h - t) + kf * t / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn crash_counts_non_decreasing(times in event_times()) {
        let r = trial("a", 0, &times);
        let mut last = 0;
        for i in 0..=100 {
            let c = crash_count_at(&r, f64::from(i) / 10.0).unwrap();
            prop_assert!(c >= last);
            last = c;
        }
        prop_assert_eq!(last, times.len() as u64);
    }

    #[test]
    fn compare_is_order_independent(a in prop::collection::vec(event_times(), 1..6), b in prop::collection::vec(event_times(), 1..6)) {
        let ta: Vec<TrialRecord> = a.iter().enumerate().map(|(i, t)| trial("A", i as u32, t)).collect();
        let tb: Vec<TrialRecord> = b.iter().enumerate().map(|(i, t)| trial("B", i as u32, t)).collect();
        let ra: Vec<&TrialRecord> = ta.iter().collect();
        let rb: Vec<&TrialRecord> = tb.iter().collect();
        let ab = compare(&ra, &rb, 10.0, Metric::Raw, None, 0.95).unwrap();
        let ba = compare(&rb, &ra, 10.0, Metric::Raw, None, 0.95).unwrap();
        prop_assert!((ab.a12 + ba.a12 - 1.0).abs() < 1e-12);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!(ab.ci_a.0 <= ab.median_a && ab.median_a <= ab.ci_a.1);
    }

    #[test]
    fn mutate_respects_size_bound(input in prop::collection::vec(any::<u8>(), 0..64), max in 1usize..64, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let out = mutate(&input, max, &mut rng);
        prop_assert!(out.len() <= max.max(input.len()));
        if input.len() >= max {
            prop_assert!(out.len() <= input.len());
        }
    }
}
