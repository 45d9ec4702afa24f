//! The generic fuzzing loop.
//!
//! ```text
//! queue <- seeds
//! while not is_done(observations, queue):
//!     candidate   <- choose(queue, observations)
//!     mutated     <- mutate(candidate, observations)
//!     observation <- eval(mutated)
//!     if is_interesting(observation, observations):
//!         queue        <- queue + mutated
//!         observations <- observations + observation
//! ```
//!
//! Seeds are evaluated once each before the first mutation. Every crashing
//! evaluation is recorded as a [`CrashEvent`], interesting or not.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mutate::{mutate, DEFAULT_MAX_INPUT_SIZE};
use super::observation::{Edge, Observation};
use super::queue::{Chooser, QueueEntry, Schedule};
use super::record::{CrashEvent, TrialRecord};
use super::target::{Executor, TargetSpec};
use crate::rng::{rng_from_seed, FuzzRng};
use crate::{Error, Result};

/// Default virtual cost of one execution, in seconds.
pub const DEFAULT_SECONDS_PER_EXEC: f64 = 0.001;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Inputs that reach new edges are kept.
    #[default]
    Greybox,
    /// Coverage is ignored for guidance; only crashes are kept.
    Blackbox,
}

/// How trial time is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "clock", rename_all = "kebab-case")]
pub enum Timing {
    /// Each execution advances a virtual clock by a fixed amount. Fully deterministic.
    Virtual { seconds_per_exec: f64 },
    /// Real elapsed time. Requires a clock from the std harness.
    Wall,
}

impl Default for Timing {
    fn default() -> Self {
        Timing::Virtual {
            seconds_per_exec: DEFAULT_SECONDS_PER_EXEC,
        }
    }
}

fn default_max_input_size() -> usize {
    DEFAULT_MAX_INPUT_SIZE
}

fn default_true() -> bool {
    true
}

/// Strategy parameters of the fuzzing loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub schedule: Schedule,
    /// Execution budget; the trial also ends at its deadline.
    #[serde(default)]
    pub max_executions: Option<u64>,
    #[serde(default = "default_max_input_size")]
    pub max_input_size: usize,
    #[serde(default)]
    pub timing: Timing,
    /// Run one iteration even if the trial is already done at start.
    #[serde(default = "default_true")]
    pub min_one_iteration: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            schedule: Schedule::default(),
            max_executions: None,
            max_input_size: DEFAULT_MAX_INPUT_SIZE,
            timing: Timing::default(),
            min_one_iteration: true,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_input_size == 0 {
            return Err(Error::config("max_input_size must be at least 1"));
        }
        if let Timing::Virtual { seconds_per_exec } = self.timing {
            if !(seconds_per_exec > 0.0 && seconds_per_exec.is_finite()) {
                return Err(Error::config("seconds_per_exec must be positive"));
            }
        }
        Ok(())
    }
}

/// Source of trial time, in seconds since trial start.
pub trait Clock {
    fn now(&self) -> f64;
    /// Called once after every execution.
    fn tick(&mut self) {}
}

#[derive(Debug, Clone)]
pub struct VirtualClock {
    ticks: u64,
    step: f64,
}

impl VirtualClock {
    pub fn new(seconds_per_exec: f64) -> Self {
        Self {
            ticks: 0,
            step: seconds_per_exec,
        }
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.ticks as f64 * self.step
    }

    fn tick(&mut self) {
        self.ticks += 1;
    }
}

/// Accumulated observations of interesting executions.
#[derive(Debug, Clone, Default)]
pub struct ObservationSet {
    edges: BTreeSet<Edge>,
    count: usize,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, obs: &Observation) {
        self.edges.extend(obs.edges.iter().copied());
        self.count += 1;
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Greybox keeps crashes and inputs reaching unseen edges; blackbox keeps crashes only.
pub fn is_interesting(obs: &Observation, seen: &ObservationSet, mode: Mode) -> bool {
    match mode {
        Mode::Greybox => obs.crashed || obs.edges.iter().any(|e| !seen.edges.contains(e)),
        Mode::Blackbox => obs.crashed,
    }
}

/// Identity and budget of one trial.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub fuzzer_id: &'a str,
    pub target: &'a TargetSpec,
    pub seed_config_id: &'a str,
    pub seeds: &'a [Vec<u8>],
    pub trial_index: u32,
    pub rng_seed: u64,
    /// Seconds.
    pub deadline: f64,
}

/// A fuzzing trial in progress. Use [`FuzzLoop::run`] or drive it with [`FuzzLoop::step`].
pub struct FuzzLoop<'a, E: Executor + ?Sized, C: Clock> {
    executor: &'a E,
    setup: TrialSetup<'a>,
    config: &'a LoopConfig,
    clock: C,
    rng: FuzzRng,
    chooser: Chooser,
    queue: Vec<QueueEntry>,
    observations: ObservationSet,
    next_seed: usize,
    covered: BTreeSet<Edge>,
    coverage_growth: Vec<(f64, u64)>,
    crashes: Vec<CrashEvent>,
    executions: u64,
}

impl<'a, E: Executor + ?Sized, C: Clock> FuzzLoop<'a, E, C> {
    pub fn new(executor: &'a E, setup: TrialSetup<'a>, config: &'a LoopConfig, clock: C) -> Result<Self> {
        config.validate()?;
        setup.target.validate()?;
        if !(setup.deadline >= 0.0 && setup.deadline.is_finite()) {
            return Err(Error::config(format!("invalid deadline {}", setup.deadline)));
        }
        if setup.seeds.is_empty() {
            return Err(Error::config("seed corpus is empty"));
        }
        Ok(Self {
            executor,
            rng: rng_from_seed(setup.rng_seed),
            setup,
            config,
            clock,
            chooser: Chooser::new(config.schedule),
            queue: Vec::new(),
            observations: ObservationSet::new(),
            next_seed: 0,
            covered: BTreeSet::new(),
            coverage_growth: Vec::new(),
            crashes: Vec::new(),
            executions: 0,
        })
    }

    pub fn is_done(&self) -> bool {
        if self.executions == 0 && self.config.min_one_iteration {
            return false;
        }
        if let Some(max) = self.config.max_executions {
            if self.executions >= max {
                return true;
            }
        }
        self.clock.now() >= self.setup.deadline
    }

    /// Runs one iteration: a seed dry-run while seeds remain, then choose/mutate/eval.
    pub fn step(&mut self) -> Result<()> {
        let (input, parent) = if self.next_seed < self.setup.seeds.len() {
            let seed = self.setup.seeds[self.next_seed].clone();
            self.next_seed += 1;
            (seed, None)
        } else {
            let idx = self.chooser.choose(&self.queue)?;
            self.queue[idx].times_chosen += 1;
            let mutated = mutate(&self.queue[idx].input, self.config.max_input_size, &mut self.rng);
            (mutated, Some(idx))
        };

        let started = self.clock.now();
        let mut obs = self.executor.eval(self.setup.target, &input)?;
        self.clock.tick();
        let finished = self.clock.now();
        obs.duration_us = ((finished - started).max(0.0) * 1e6) as u64;
        self.executions += 1;
        let at = finished.min(self.setup.deadline);

        let before = self.covered.len();
        self.covered.extend(obs.edges.iter().copied());
        if self.covered.len() > before {
            self.coverage_growth.push((at, self.covered.len() as u64));
        }

        if obs.crashed {
            self.crashes.push(CrashEvent {
                at,
                input: input.clone(),
                profile: obs.edges.clone(),
                trace: obs.trace.clone().unwrap_or_default(),
            });
        }

        let keep = match parent {
            None => true,
            Some(_) => is_interesting(&obs, &self.observations, self.config.mode),
        };
        if keep {
            self.queue.push(QueueEntry {
                input,
                parent,
                discovered_at: if parent.is_none() { 0.0 } else { at },
                times_chosen: 0,
            });
            self.observations.absorb(&obs);
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<TrialRecord> {
        while !self.is_done() {
            self.step()?;
        }
        self.finish()
    }

    pub fn queue(&self) -> &[QueueEntry] {
        &self.queue
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.observations
    }

    pub fn executions(&self) -> u64 {
        self.executions
    }

    pub fn finish(self) -> Result<TrialRecord> {
        if self.executions == 0 {
            return Err(Error::config(format!(
                "trial {}/{}/{}/{} performed zero executions",
                self.setup.fuzzer_id,
                self.setup.target.id(),
                self.setup.seed_config_id,
                self.setup.trial_index
            )));
        }
        Ok(TrialRecord {
            fuzzer_id: String::from(self.setup.fuzzer_id),
            target_id: self.setup.target.id(),
            seed_config_id: String::from(self.setup.seed_config_id),
            trial_index: self.setup.trial_index,
            rng_seed: self.setup.rng_seed,
            deadline: self.setup.deadline,
            crashes: self.crashes,
            coverage_growth: self.coverage_growth,
            executions: self.executions,
        })
    }
}

/// Runs a trial with the supplied clock.
pub fn run_fuzz_loop_with_clock<E: Executor + ?Sized, C: Clock>(
    executor: &E,
    setup: TrialSetup<'_>,
    config: &LoopConfig,
    clock: C,
) -> Result<TrialRecord> {
    FuzzLoop::new(executor, setup, config, clock)?.run()
}

/// Runs a trial on the virtual clock. Wall-clock timing needs the std harness.
pub fn run_fuzz_loop<E: Executor + ?Sized>(executor: &E, setup: TrialSetup<'_>, config: &LoopConfig) -> Result<TrialRecord> {
    match config.timing {
        Timing::Virtual { seconds_per_exec } => {
            run_fuzz_loop_with_clock(executor, setup, config, VirtualClock::new(seconds_per_exec))
        }
        Timing::Wall => Err(Error::config("wall-clock timing needs a clock from the std harness")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzz::observation::CoverageProfile;
    use crate::fuzz::target::BuiltinExecutor;
    use alloc::vec;

    fn setup<'a>(target: &'a TargetSpec, seeds: &'a [Vec<u8>], deadline: f64, rng_seed: u64) -> TrialSetup<'a> {
        TrialSetup {
            fuzzer_id: "grey",
            target,
            seed_config_id: "empty",
            seeds,
            trial_index: 0,
            rng_seed,
            deadline,
        }
    }

    fn obs(edges: &[(u32, u32)], crashed: bool) -> Observation {
        let p: CoverageProfile = edges.iter().map(|&(a, b)| Edge(a, b)).collect();
        if crashed {
            Observation::crash(p, Default::default())
        } else {
            Observation::clean(p)
        }
    }

    #[test]
    fn first_observation_is_interesting() {
        let seen = ObservationSet::new();
        assert!(is_interesting(&obs(&[(0, 1), (1, 2)], false), &seen, Mode::Greybox));
    }

    #[test]
    fn nothing_new_is_not_interesting() {
        let mut seen = ObservationSet::new();
        seen.absorb(&obs(&[(0, 1), (1, 2), (2, 3)], false));
        assert!(!is_interesting(&obs(&[(0, 1), (1, 2)], false), &seen, Mode::Greybox));
        assert!(is_interesting(&obs(&[(0, 1)], true), &seen, Mode::Greybox));
    }

    #[test]
    fn blackbox_ignores_new_edges() {
        let seen = ObservationSet::new();
        let edges: Vec<_> = (0..10).map(|i| (i, i + 1)).collect();
        assert!(!is_interesting(&obs(&edges, false), &seen, Mode::Blackbox));
        assert!(is_interesting(&obs(&edges, true), &seen, Mode::Blackbox));
    }

    #[test]
    fn branchy_crash_found_from_empty_seed() {
        let seeds = vec![Vec::new()];
        let cfg = LoopConfig {
            max_executions: Some(50_000),
            ..LoopConfig::default()
        };
        let rec = run_fuzz_loop(&BuiltinExecutor, setup(&TargetSpec::BranchyCrash, &seeds, 1e9, 11), &cfg).unwrap();
        assert!(!rec.crashes.is_empty());
        assert_eq!(rec.executions, 50_000);
        rec.check_invariants().unwrap();
    }

    #[test]
    fn zero_deadline_without_forced_iteration_is_rejected() {
        let seeds = vec![Vec::new()];
        let cfg = LoopConfig {
            min_one_iteration: false,
            ..LoopConfig::default()
        };
        let err = run_fuzz_loop(&BuiltinExecutor, setup(&TargetSpec::BranchyCrash, &seeds, 0.0, 1), &cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let forced = LoopConfig::default();
        let rec = run_fuzz_loop(&BuiltinExecutor, setup(&TargetSpec::BranchyCrash, &seeds, 0.0, 1), &forced).unwrap();
        assert_eq!(rec.executions, 1);
    }

    #[test]
    fn same_seed_same_record() {
        let seeds = vec![Vec::new()];
        let cfg = LoopConfig::default();
        let t = TargetSpec::VersionedFamily { version: 0 };
        let a = run_fuzz_loop(&BuiltinExecutor, setup(&t, &seeds, 5.0, 99), &cfg).unwrap();
        let b = run_fuzz_loop(&BuiltinExecutor, setup(&t, &seeds, 5.0, 99), &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_fuzz_loop(&BuiltinExecutor, setup(&t, &seeds, 5.0, 100), &cfg).unwrap();
        assert_eq!(c.executions, a.executions);
    }

    #[test]
    fn greybox_observations_grow_monotonically_from_seed_edges() {
        let seeds = vec![b"#".to_vec(), b"f".to_vec()];
        let cfg = LoopConfig::default();
        let t = TargetSpec::VersionedFamily { version: 0 };
        let mut lp = FuzzLoop::new(&BuiltinExecutor, setup(&t, &seeds, 3.0, 5), &cfg, VirtualClock::new(0.001)).unwrap();
        let mut seed_edges = BTreeSet::new();
        for s in &seeds {
            seed_edges.extend(BuiltinExecutor.eval(&t, s).unwrap().edges.iter().copied());
        }
        let mut prev = BTreeSet::new();
        while !lp.is_done() {
            lp.step().unwrap();
            let now = lp.observations().edges().clone();
            assert!(now.is_superset(&prev));
            prev = now;
            if lp.executions() >= seeds.len() as u64 {
                assert!(prev.is_superset(&seed_edges));
            }
        }
        assert!(prev.len() > seed_edges.len());
    }

    #[test]
    fn virtual_clock_bounds_executions() {
        let seeds = vec![Vec::new()];
        let cfg = LoopConfig::default();
        let rec = run_fuzz_loop(&BuiltinExecutor, setup(&TargetSpec::SharedCrashPaths, &seeds, 2.0, 3), &cfg).unwrap();
        assert_eq!(rec.executions, 2000);
        rec.check_invariants().unwrap();
    }
}
