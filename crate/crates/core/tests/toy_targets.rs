use std::collections::BTreeSet;

use fuzzeval_core::dedup::{
    coverage_unique_online, dedup_report, stack_hash, triage_versions, BugLabel, BuiltinGroundTruth, GroundTruth,
    PLANTED_BUG,
};
use fuzzeval_core::fuzz::target::{versioned_planted_bug, VERSIONED_FAMILY_FIXES};
use fuzzeval_core::fuzz::{eval_builtin, run_fuzz_loop, BuiltinExecutor, LoopConfig, Mode, TargetSpec, TrialSetup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn branchy_run(seed: u64) -> fuzzeval_core::fuzz::TrialRecord {
    let seeds = vec![Vec::new()];
    let setup = TrialSetup {
        fuzzer_id: "grey",
        target: &TargetSpec::BranchyCrash,
        seed_config_id: "empty",
        seeds: &seeds,
        trial_index: 0,
        rng_seed: seed,
        deadline: 2.0,
    };
    run_fuzz_loop(&BuiltinExecutor, setup, &LoopConfig::default()).unwrap()
}

#[test]
fn branchy_profiles_differ_in_one_edge() {
    let a = eval_builtin(&TargetSpec::BranchyCrash, b"a").unwrap();
    let z = eval_builtin(&TargetSpec::BranchyCrash, b"z").unwrap();
    assert!(a.crashed && z.crashed);
    let ea: BTreeSet<_> = a.edges.iter().copied().collect();
    let ez: BTreeSet<_> = z.edges.iter().copied().collect();
    assert_eq!(ea.symmetric_difference(&ez).count(), 2);
    assert_eq!(ea.intersection(&ez).count(), ea.len() - 1);
    assert!(!eval_builtin(&TargetSpec::BranchyCrash, b"").unwrap().crashed);
}

#[test]
fn coverage_dedup_overcounts_branchy() {
    let r = branchy_run(1);
    let classes: BTreeSet<bool> = r.crashes.iter().map(|c| c.input[0] == b'a').collect();
    assert_eq!(classes.len(), 2, "run should find both input classes");
    let unique = coverage_unique_online(&r.crashes).unwrap().iter().filter(|&&u| u).count();
    assert!(unique >= 2);
    let gt = BuiltinGroundTruth { executor: &BuiltinExecutor };
    let bugs: BTreeSet<BugLabel> = r
        .crashes
        .iter()
        .map(|c| gt.label(&r.target_id, c).unwrap())
        .collect();
    assert_eq!(bugs.into_iter().collect::<Vec<_>>(), [PLANTED_BUG]);
}

#[test]
fn shared_crash_paths_agree_on_three_frames() {
    let f = eval_builtin(&TargetSpec::SharedCrashPaths, b"f%").unwrap();
    let g = eval_builtin(&TargetSpec::SharedCrashPaths, b"g%").unwrap();
    let (tf, tg) = (f.trace.unwrap(), g.trace.unwrap());
    assert_eq!(tf.frames[..3], tg.frames[..3]);
    for depth in 4..=tf.frames.len().min(tg.frames.len()) {
        assert_ne!(tf.frames[..depth], tg.frames[..depth]);
    }
    assert_eq!(stack_hash(&tf, 3).unwrap(), stack_hash(&tg, 3).unwrap());
    assert_ne!(stack_hash(&tf, 5).unwrap(), stack_hash(&tg, 5).unwrap());
    assert!(!eval_builtin(&TargetSpec::SharedCrashPaths, b"f").unwrap().crashed);
    assert!(!eval_builtin(&TargetSpec::SharedCrashPaths, b"%").unwrap().crashed);
}

/// Inputs crashing version 0 of the versioned family, with planted bugs
/// uniformly mixed and random trailing noise.
pub fn versioned_corpus(count: usize, seed: u64) -> Vec<(Vec<u8>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bug = rng.gen_range(0..VERSIONED_FAMILY_FIXES.len());
            let mut input = vec![b'#', b'0' + bug as u8];
            input.extend(std::iter::repeat(b'!').take(bug));
            let extra = rng.gen_range(0..8);
            input.extend((0..extra).map(|_| rng.gen::<u8>()));
            (input, bug)
        })
        .collect()
}

#[test]
fn triage_recovers_planted_bugs() {
    let corpus = versioned_corpus(200, 42);
    let inputs: Vec<Vec<u8>> = corpus.iter().map(|(i, _)| i.clone()).collect();
    let labels = triage_versions(&BuiltinExecutor, &inputs, &TargetSpec::versioned_family()).unwrap();
    for ((input, bug), label) in corpus.iter().zip(&labels) {
        assert_eq!(versioned_planted_bug(input), Some(*bug));
        assert_eq!(*label, BugLabel::FixedBy(VERSIONED_FAMILY_FIXES[*bug]), "input {input:?}");
    }
    let distinct: BTreeSet<_> = labels.iter().collect();
    assert_eq!(distinct.len(), 4);
}

#[test]
fn dedup_table_on_shared_paths() {
    let inputs: Vec<&[u8]> = vec![b"f%", b"g%", b"f%x", b"g%%"];
    let gt = BuiltinGroundTruth { executor: &BuiltinExecutor };
    let mut labels = std::collections::BTreeMap::new();
    let mut h3 = std::collections::BTreeMap::new();
    let mut h5 = std::collections::BTreeMap::new();
    for (i, input) in inputs.iter().enumerate() {
        let obs = eval_builtin(&TargetSpec::SharedCrashPaths, input).unwrap();
        let event = fuzzeval_core::fuzz::CrashEvent {
            at: i as f64,
            input: input.to_vec(),
            profile: obs.edges.clone(),
            trace: obs.trace.clone().unwrap(),
        };
        labels.insert(i, gt.label("shared-crash-paths", &event).unwrap());
        h3.insert(i, stack_hash(&event.trace, 3).unwrap());
        h5.insert(i, stack_hash(&event.trace, 5).unwrap());
    }
    let t3 = dedup_report(&labels, &h3).unwrap();
    let t5 = dedup_report(&labels, &h5).unwrap();
    assert_eq!((t3.distinct_hashes, t3.distinct_bugs), (1, 1));
    assert_eq!((t5.distinct_hashes, t5.distinct_bugs), (2, 1));
    assert_eq!(t5.overcount_factor, Some(2.0));
}

#[test]
fn blackbox_run_respects_execution_cap() {
    let seeds = vec![b"zz".to_vec()];
    let cfg = LoopConfig {
        mode: Mode::Blackbox,
        max_executions: Some(300),
        ..LoopConfig::default()
    };
    let setup = TrialSetup {
        fuzzer_id: "black",
        target: &TargetSpec::SharedCrashPaths,
        seed_config_id: "lit",
        seeds: &seeds,
        trial_index: 0,
        rng_seed: 3,
        deadline: 10.0,
    };
    let r = run_fuzz_loop(&BuiltinExecutor, setup, &cfg).unwrap();
    assert_eq!(r.executions, 300);
    r.check_invariants().unwrap();
}

#[test]
fn loop_is_deterministic() {
    let a = serde_json::to_string(&branchy_run(9)).unwrap();
    let b = serde_json::to_string(&branchy_run(9)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, serde_json::to_string(&branchy_run(10)).unwrap());
}
