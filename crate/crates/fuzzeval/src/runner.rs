//! Parallel campaign execution.
//!
//! Trials are planned up front in canonical order, each with a seed derived
//! from its coordinates, and handed to at most `workers` threads through a
//! shared counter. Results are keyed by trial, so completion order never
//! shows in the output.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use fuzzeval_core::campaign::{plan_trials, CampaignConfig, CampaignResult, Engine, PlannedTrial};
use fuzzeval_core::fuzz::{
    eval_builtin, run_fuzz_loop, run_fuzz_loop_with_clock, simulated_fuzzer, Clock, Executor, Observation,
    TargetSpec, Timing, TrialRecord, TrialSetup,
};

use crate::seeds::load_seed_corpus;
use crate::subprocess::ProcessExecutor;
use crate::{HarnessError, Result};

/// Runs built-in targets in process and external ones as subprocesses.
#[derive(Debug, Clone, Default)]
pub struct HarnessExecutor {
    pub process: ProcessExecutor,
}

impl Executor for HarnessExecutor {
    fn eval(&self, target: &TargetSpec, input: &[u8]) -> fuzzeval_core::Result<Observation> {
        match target {
            TargetSpec::ExternalSubprocess { path } => self.process.eval(path, input),
            _ => eval_builtin(target, input),
        }
    }
}

/// Seconds since construction.
#[derive(Debug, Clone)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Runs one planned trial.
pub fn run_trial<E: Executor + ?Sized>(
    planned: &PlannedTrial<'_>,
    seeds: &[Vec<u8>],
    deadline: f64,
    executor: &E,
) -> fuzzeval_core::Result<TrialRecord> {
    match &planned.fuzzer.engine {
        Engine::Simulated { profile } => simulated_fuzzer(
            profile,
            &planned.key.fuzzer_id,
            planned.key.trial_index,
            deadline,
            planned.rng_seed,
        ),
        Engine::Loop(config) => {
            let target = planned
                .target
                .ok_or_else(|| fuzzeval_core::Error::Logic("loop trial without a target".into()))?;
            let setup = TrialSetup {
                fuzzer_id: &planned.key.fuzzer_id,
                target,
                seed_config_id: &planned.key.seed_config_id,
                seeds,
                trial_index: planned.key.trial_index,
                rng_seed: planned.rng_seed,
                deadline,
            };
            match config.timing {
                Timing::Virtual { .. } => run_fuzz_loop(executor, setup, config),
                Timing::Wall => run_fuzz_loop_with_clock(executor, setup, config, WallClock::start()),
            }
        }
    }
}

/// Runs every trial of `config`.
///
/// On failure the error names the earliest failing trial in plan order and
/// carries every trial that did complete.
pub fn run_campaign<E: Executor + ?Sized>(config: &CampaignConfig, executor: &E) -> Result<CampaignResult> {
    let plan = plan_trials(config)?;
    let mut corpora = BTreeMap::new();
    for seed_config in &config.seed_configs {
        corpora.insert(seed_config.id.as_str(), load_seed_corpus(seed_config)?);
    }
    let no_seeds: Vec<Vec<u8>> = Vec::new();

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let done = Mutex::new(Vec::with_capacity(plan.len()));
    let failures = Mutex::new(Vec::new());
    let workers = config.workers.min(plan.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(planned) = plan.get(i) else { break };
                let seeds = planned
                    .seed_config
                    .map_or(&no_seeds, |s| &corpora[s.id.as_str()]);
                match run_trial(planned, seeds, config.deadline, executor) {
                    Ok(record) => done.lock().unwrap().push(record),
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        failures.lock().unwrap().push((i, e));
                    }
                }
            });
        }
    });

    let result: CampaignResult = done.into_inner().unwrap().into_iter().collect();
    let mut failures = failures.into_inner().unwrap();
    failures.sort_by_key(|(i, _)| *i);
    match failures.into_iter().next() {
        None => Ok(result),
        Some((i, source)) => Err(HarnessError::Trial {
            cell: plan[i].key.clone(),
            source,
            partial: Box::new(result),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fuzzeval_core::campaign::FuzzerConfig;
    use fuzzeval_core::fuzz::{LoopConfig, Mode, SeedConfig};

    fn config(workers: usize) -> CampaignConfig {
        let mut c = CampaignConfig::new(
            FuzzerConfig::looping("grey", LoopConfig::default()),
            FuzzerConfig::looping(
                "black",
                LoopConfig {
                    mode: Mode::Blackbox,
                    ..LoopConfig::default()
                },
            ),
        );
        c.targets = vec![TargetSpec::BranchyCrash];
        c.seed_configs = vec![SeedConfig::empty("empty")];
        c.trials = 3;
        c.deadline = 0.5;
        c.workers = workers;
        c
    }

    #[test]
    fn cardinality_and_worker_independence() {
        let one = run_campaign(&config(1), &HarnessExecutor::default()).unwrap();
        let eight = run_campaign(&config(8), &HarnessExecutor::default()).unwrap();
        assert_eq!(one.len(), 6);
        assert_eq!(one, eight);
    }

    #[test]
    fn failing_trial_is_identified() {
        let mut c = config(2);
        c.targets = vec![TargetSpec::ExternalSubprocess {
            path: "/nonexistent/fuzz-target".into(),
        }];
        match run_campaign(&c, &HarnessExecutor::default()) {
            Err(HarnessError::Trial { cell, source, partial }) => {
                assert_eq!((cell.fuzzer_id.as_str(), cell.trial_index), ("grey", 0));
                assert!(matches!(source, fuzzeval_core::Error::Execution(_)));
                assert!(partial.len() < 6);
            }
            other => panic!("{other:?}"),
        }
    }
}
