use std::os::unix::fs::PermissionsExt;
use std::path::Path;
use std::time::Duration;

use fuzzeval::subprocess::ProcessExecutor;
use fuzzeval::{run_campaign, HarnessExecutor};
use fuzzeval_core::campaign::{CampaignConfig, FuzzerConfig, Metric, metric_count_at};
use fuzzeval_core::fuzz::{Executor, LoopConfig, SeedConfig, TargetSpec};

fn script(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path.display().to_string()
}

// Everything that spawns lives in one test so no other thread holds a
// script open for writing while it is executed.
#[test]
fn external_targets() {
    let dir = tempfile::tempdir().unwrap();
    let segv = script(dir.path(), "segv.sh", "kill -SEGV $$");
    let asan = script(
        dir.path(),
        "asan.sh",
        "echo '==77==ERROR: AddressSanitizer: stack-buffer-overflow' >&2\n\
         echo '    #0 0x1 in parse_chunk /src/p.c:42:7' >&2\n\
         echo '    #1 0x2 in main /src/p.c:90:3' >&2\n\
         exit 1",
    );
    let clean = script(dir.path(), "clean.sh", "exit 3");
    let hang = script(dir.path(), "hang.sh", "sleep 5");
    // Crashes when the input file starts with 'x'.
    let picky = script(
        dir.path(),
        "picky.sh",
        "case \"$(head -c 1 \"$1\")\" in x) kill -ABRT $$ ;; esac\nexit 0",
    );

    let exec = ProcessExecutor {
        hang_limit: Duration::from_millis(300),
    };
    let obs = exec.eval(&segv, b"data").unwrap();
    assert!(obs.crashed);
    assert_eq!(obs.trace.unwrap().frames[0].to_string(), "signal:SIGSEGV:0");
    assert!(obs.edges.is_empty());

    let obs = exec.eval(&asan, b"").unwrap();
    let frames: Vec<String> = obs.trace.unwrap().frames.iter().map(ToString::to_string).collect();
    assert_eq!(frames, ["parse_chunk:42", "main:90"]);

    assert!(!exec.eval(&clean, b"").unwrap().crashed);
    let started = std::time::Instant::now();
    assert!(!exec.eval(&hang, b"").unwrap().crashed);
    assert!(started.elapsed() < Duration::from_secs(3));

    assert!(exec.eval(&picky, b"xyz").unwrap().crashed);
    assert!(!exec.eval(&picky, b"abc").unwrap().crashed);
    assert!(matches!(
        exec.eval("/nonexistent/target", b""),
        Err(fuzzeval_core::Error::Execution(_))
    ));

    let harness = HarnessExecutor::default();
    let target = TargetSpec::ExternalSubprocess { path: picky.clone() };
    assert!(harness.eval(&target, b"x").unwrap().crashed);

    // A small blackbox campaign against the external target.
    let looped = LoopConfig {
        mode: fuzzeval_core::fuzz::Mode::Blackbox,
        max_executions: Some(40),
        ..LoopConfig::default()
    };
    let mut config = CampaignConfig::new(
        FuzzerConfig::looping("a", looped.clone()),
        FuzzerConfig::looping("b", looped),
    );
    config.targets = vec![target];
    config.seed_configs = vec![SeedConfig::literal("x", vec![b"x".to_vec()])];
    config.trials = 2;
    config.workers = 2;
    let result = run_campaign(&config, &harness).unwrap();
    assert_eq!(result.len(), 4);
    for trial in result.trials.values() {
        assert!(!trial.crashes.is_empty(), "the seed itself crashes");
        // The seed's dry run ends one virtual tick after the start.
        assert_eq!(trial.crashes[0].at, 0.001);
        assert!(metric_count_at(trial, 0.001, Metric::Raw, None).unwrap() >= 1);
        assert!(matches!(
            metric_count_at(trial, 1.0, Metric::CovUnique, None),
            Err(fuzzeval_core::Error::StrategyUnavailable(_))
        ));
    }
}
