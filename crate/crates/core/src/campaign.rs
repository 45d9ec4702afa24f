//! Campaign configuration, trial planning and A-vs-B comparison.
//!
//! Running trials concurrently is the job of the std harness; everything
//! here is deterministic bookkeeping over [`TrialRecord`]s.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dedup::{coverage_unique_online, stack_hash, BugLabel, GroundTruth, DEFAULT_STACK_FRAMES};
use crate::fuzz::simulated::{SIMULATED_SEED_CONFIG_ID, SIMULATED_TARGET_ID};
use crate::fuzz::{LoopConfig, SeedConfig, StochasticProfile, TargetSpec, TrialRecord};
use crate::rng::derive_seed;
use crate::stats::{mann_whitney_u, median_ci, DEFAULT_CI_LEVEL};
use crate::{Error, Result};

pub const DEFAULT_TRIALS: u32 = 30;
/// Desk-scale stand-in for a 24 hour trial, in seconds.
pub const DEFAULT_DEADLINE: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Engine {
    /// The real fuzzing loop against a target.
    Loop(LoopConfig),
    /// A stochastic crash process; needs no target.
    Simulated { profile: StochasticProfile },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzerConfig {
    pub id: String,
    pub engine: Engine,
}

impl FuzzerConfig {
    pub fn looping(id: impl Into<String>, config: LoopConfig) -> Self {
        Self {
            id: id.into(),
            engine: Engine::Loop(config),
        }
    }

    pub fn simulated(id: impl Into<String>, profile: StochasticProfile) -> Self {
        Self {
            id: id.into(),
            engine: Engine::Simulated { profile },
        }
    }

    pub fn is_simulated(&self) -> bool {
        matches!(self.engine, Engine::Simulated { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::config("fuzzer id must not be empty"));
        }
        match &self.engine {
            Engine::Loop(c) => c.validate(),
            Engine::Simulated { profile } => profile.validate(),
        }
    }
}

fn default_trials() -> u32 {
    DEFAULT_TRIALS
}

fn default_deadline() -> f64 {
    DEFAULT_DEADLINE
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// The fuzzer under evaluation.
    pub fuzzer_a: FuzzerConfig,
    /// The baseline.
    pub fuzzer_b: FuzzerConfig,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub seed_configs: Vec<SeedConfig>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    /// Seconds per trial.
    #[serde(default = "default_deadline")]
    pub deadline: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub master_rng_seed: u64,
    /// Report times in seconds; empty means `deadline/4, deadline/2, deadline`.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

impl CampaignConfig {
    pub fn new(fuzzer_a: FuzzerConfig, fuzzer_b: FuzzerConfig) -> Self {
        Self {
            fuzzer_a,
            fuzzer_b,
            targets: Vec::new(),
            seed_configs: Vec::new(),
            trials: DEFAULT_TRIALS,
            deadline: DEFAULT_DEADLINE,
            workers: 1,
            master_rng_seed: 0,
            checkpoints: Vec::new(),
        }
    }

    /// True when both fuzzers are simulated; such campaigns have no targets.
    pub fn is_simulated(&self) -> bool {
        self.fuzzer_a.is_simulated() && self.fuzzer_b.is_simulated()
    }

    pub fn validate(&self) -> Result<()> {
        self.fuzzer_a.validate()?;
        self.fuzzer_b.validate()?;
        if self.fuzzer_a.id == self.fuzzer_b.id {
            return Err(Error::config("fuzzer_a and fuzzer_b need distinct ids"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if !(self.deadline > 0.0 && self.deadline.is_finite()) {
            return Err(Error::config(format!("deadline must be positive, got {}", self.deadline)));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if self.checkpoints.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::config("checkpoints must be sorted"));
        }
        if self.checkpoints.iter().any(|c| !(*c >= 0.0 && *c <= self.deadline)) {
            return Err(Error::config("checkpoints must lie in [0, deadline]"));
        }
        match (self.fuzzer_a.is_simulated(), self.fuzzer_b.is_simulated()) {
            (true, true) => {
                if !self.targets.is_empty() || !self.seed_configs.is_empty() {
                    return Err(Error::config("simulated campaigns take no targets or seed configs"));
                }
            }
            (false, false) => {
                if self.targets.is_empty() {
                    return Err(Error::config("campaign has no targets"));
                }
                if self.seed_configs.is_empty() {
                    return Err(Error::config("campaign has no seed configs"));
                }
                for t in &self.targets {
                    t.validate()?;
                }
                let mut ids = BTreeSet::new();
                for s in &self.seed_configs {
                    s.validate()?;
                    if !ids.insert(s.id.as_str()) {
                        return Err(Error::config(format!("duplicate seed config id {}", s.id)));
                    }
                }
                let mut tids = BTreeSet::new();
                for t in &self.targets {
                    if !tids.insert(t.id()) {
                        return Err(Error::config(format!("duplicate target {}", t.id())));
                    }
                }
            }
            _ => return Err(Error::config("cannot mix a simulated fuzzer with a real one")),
        }
        Ok(())
    }

    pub fn effective_checkpoints(&self) -> Vec<f64> {
        if self.checkpoints.is_empty() {
            alloc::vec![self.deadline / 4.0, self.deadline / 2.0, self.deadline]
        } else {
            self.checkpoints.clone()
        }
    }
}

/// Coordinates of one trial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialKey {
    pub fuzzer_id: String,
    pub target_id: String,
    pub seed_config_id: String,
    pub trial_index: u32,
}

impl TrialKey {
    pub fn of(record: &TrialRecord) -> Self {
        Self {
            fuzzer_id: record.fuzzer_id.clone(),
            target_id: record.target_id.clone(),
            seed_config_id: record.seed_config_id.clone(),
            trial_index: record.trial_index,
        }
    }
}

impl core::fmt::Display for TrialKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}/{}/{}", self.fuzzer_id, self.target_id, self.seed_config_id, self.trial_index)
    }
}

/// A trial ready to run.
#[derive(Debug, Clone)]
pub struct PlannedTrial<'a> {
    pub key: TrialKey,
    pub fuzzer: &'a FuzzerConfig,
    /// `None` for simulated fuzzers.
    pub target: Option<&'a TargetSpec>,
    pub seed_config: Option<&'a SeedConfig>,
    pub rng_seed: u64,
}

/// Every trial of the campaign in canonical order: fuzzer A then B, then
/// targets, seed configs and trial indices in configuration order.
pub fn plan_trials(config: &CampaignConfig) -> Result<Vec<PlannedTrial<'_>>> {
    config.validate()?;
    let mut plan = Vec::new();
    for fuzzer in [&config.fuzzer_a, &config.fuzzer_b] {
        let cells: Vec<(Option<&TargetSpec>, Option<&SeedConfig>)> = if config.is_simulated() {
            alloc::vec![(None, None)]
        } else {
            config
                .targets
                .iter()
                .flat_map(|t| config.seed_configs.iter().map(move |s| (Some(t), Some(s))))
                .collect()
        };
        for (target, seed_config) in cells {
            let target_id = target.map_or_else(|| String::from(SIMULATED_TARGET_ID), TargetSpec::id);
            let seed_config_id = seed_config.map_or(SIMULATED_SEED_CONFIG_ID, |s| s.id.as_str());
            for trial_index in 0..config.trials {
                plan.push(PlannedTrial {
                    rng_seed: derive_seed(config.master_rng_seed, &fuzzer.id, &target_id, seed_config_id, trial_index),
                    key: TrialKey {
                        fuzzer_id: fuzzer.id.clone(),
                        target_id: target_id.clone(),
                        seed_config_id: String::from(seed_config_id),
                        trial_index,
                    },
                    fuzzer,
                    target,
                    seed_config,
                });
            }
        }
    }
    Ok(plan)
}

/// All trial records of a campaign, keyed by their coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignResult {
    pub trials: BTreeMap<TrialKey, TrialRecord>,
}

impl CampaignResult {
    pub fn insert(&mut self, record: TrialRecord) {
        self.trials.insert(TrialKey::of(&record), record);
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Trials of one fuzzer on one (target, seed config) cell, by trial index.
    pub fn cell(&self, fuzzer_id: &str, target_id: &str, seed_config_id: &str) -> Vec<&TrialRecord> {
        self.trials
            .values()
            .filter(|r| r.fuzzer_id == fuzzer_id && r.target_id == target_id && r.seed_config_id == seed_config_id)
            .collect()
    }

    /// Distinct (target, seed config) pairs, sorted.
    pub fn cells(&self) -> Vec<(String, String)> {
        let set: BTreeSet<(String, String)> = self
            .trials
            .values()
            .map(|r| (r.target_id.clone(), r.seed_config_id.clone()))
            .collect();
        set.into_iter().collect()
    }
}

impl FromIterator<TrialRecord> for CampaignResult {
    fn from_iter<I: IntoIterator<Item = TrialRecord>>(iter: I) -> Self {
        let mut r = CampaignResult::default();
        for t in iter {
            r.insert(t);
        }
        r
    }
}

/// What counts as a "found crash" when comparing trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Every crashing input.
    Raw,
    /// Crashes unique under AFL's coverage-profile rule.
    CovUnique,
    /// Distinct stack hashes over the given number of frames.
    StackHash { frames: usize },
    /// Distinct ground-truth bugs (`Unknown` crashes are not counted).
    GroundTruthBugs,
}

impl Metric {
    pub fn stack_hash() -> Self {
        Metric::StackHash {
            frames: DEFAULT_STACK_FRAMES,
        }
    }
}

/// Times at which the metric's count increases by one, in order.
pub fn metric_event_times(trial: &TrialRecord, metric: Metric, gt: Option<&dyn GroundTruth>) -> Result<Vec<f64>> {
    let events = &trial.crashes;
    Ok(match metric {
        Metric::Raw => events.iter().map(|e| e.at).collect(),
        Metric::CovUnique => {
            let flags = coverage_unique_online(events)?;
            events.iter().zip(flags).filter(|(_, u)| *u).map(|(e, _)| e.at).collect()
        }
        Metric::StackHash { frames } => {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for e in events {
                if seen.insert(stack_hash(&e.trace, frames)?) {
                    out.push(e.at);
                }
            }
            out
        }
        Metric::GroundTruthBugs => {
            let gt = gt.ok_or_else(|| Error::StrategyUnavailable("ground-truth metric needs a labeler".into()))?;
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for e in events {
                let label = gt.label(&trial.target_id, e)?;
                if label != BugLabel::Unknown && seen.insert(label) {
                    out.push(e.at);
                }
            }
            out
        }
    })
}

fn check_time(trial: &TrialRecord, t: f64) -> Result<()> {
    if !(t >= 0.0 && t <= trial.deadline) {
        return Err(Error::arg(format!(
            "time {t} outside [0, {}] for trial {}",
            trial.deadline,
            trial.key_string()
        )));
    }
    Ok(())
}

/// Crash events with time `<= t`.
pub fn crash_count_at(trial: &TrialRecord, t: f64) -> Result<u64> {
    check_time(trial, t)?;
    Ok(trial.crashes.iter().take_while(|e| e.at <= t).count() as u64)
}

/// Metric value at time `t`.
pub fn metric_count_at(trial: &TrialRecord, t: f64, metric: Metric, gt: Option<&dyn GroundTruth>) -> Result<u64> {
    check_time(trial, t)?;
    Ok(metric_event_times(trial, metric, gt)?.iter().filter(|&&x| x <= t).count() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub target_id: String,
    pub seed_config_id: String,
    pub at_time: f64,
    pub median_a: f64,
    pub median_b: f64,
    pub u_statistic: f64,
    pub p_value: f64,
    pub a12: f64,
    pub ci_a: (f64, f64),
    pub ci_b: (f64, f64),
    pub n_a: usize,
    pub n_b: usize,
}

fn common_cell<'r>(trials: &[&'r TrialRecord]) -> Option<(&'r str, &'r str)> {
    let first = trials.first()?;
    trials
        .iter()
        .all(|t| t.target_id == first.target_id && t.seed_config_id == first.seed_config_id)
        .then_some((first.target_id.as_str(), first.seed_config_id.as_str()))
}

/// Compares per-trial metric values of A and B at time `t`.
pub fn compare(
    trials_a: &[&TrialRecord],
    trials_b: &[&TrialRecord],
    t: f64,
    metric: Metric,
    gt: Option<&dyn GroundTruth>,
    level: f64,
) -> Result<ComparisonResult> {
    if trials_a.is_empty() || trials_b.is_empty() {
        return Err(Error::arg("both trial collections must be non-empty"));
    }
    let (Some(cell_a), Some(cell_b)) = (common_cell(trials_a), common_cell(trials_b)) else {
        return Err(Error::arg("trials within a collection span several targets or seed configs"));
    };
    if cell_a != cell_b {
        return Err(Error::arg(format!(
            "collections differ in target/seed config: {}/{} vs {}/{}",
            cell_a.0, cell_a.1, cell_b.0, cell_b.1
        )));
    }
    let values = |trials: &[&TrialRecord]| -> Result<Vec<f64>> {
        trials.iter().map(|tr| metric_count_at(tr, t, metric, gt).map(|c| c as f64)).collect()
    };
    let a = values(trials_a)?;
    let b = values(trials_b)?;
    let test = mann_whitney_u(&a, &b)?;
    let ci_a = median_ci(&a, level)?;
    let ci_b = median_ci(&b, level)?;
    Ok(ComparisonResult {
        target_id: String::from(cell_a.0),
        seed_config_id: String::from(cell_a.1),
        at_time: t,
        median_a: ci_a.median,
        median_b: ci_b.median,
        u_statistic: test.u_statistic,
        p_value: test.p_value,
        a12: test.a12,
        ci_a: (ci_a.lo, ci_a.hi),
        ci_b: (ci_b.lo, ci_b.hi),
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Compares A and B on every (target, seed config) cell at every checkpoint.
pub fn compare_campaign(
    result: &CampaignResult,
    fuzzer_a: &str,
    fuzzer_b: &str,
    checkpoints: &[f64],
    metric: Metric,
    gt: Option<&dyn GroundTruth>,
    level: f64,
) -> Result<Vec<ComparisonResult>> {
    let mut out = Vec::new();
    for (target, seed) in result.cells() {
        let a = result.cell(fuzzer_a, &target, &seed);
        let b = result.cell(fuzzer_b, &target, &seed);
        if a.is_empty() || b.is_empty() {
            return Err(Error::arg(format!("cell {target}/{seed} lacks trials for one of the fuzzers")));
        }
        for &t in checkpoints {
            out.push(compare(&a, &b, t, metric, gt, level)?);
        }
    }
    Ok(out)
}

/// [`compare`] at the default 95% level.
pub fn compare_default(trials_a: &[&TrialRecord], trials_b: &[&TrialRecord], t: f64, metric: Metric) -> Result<ComparisonResult> {
    compare(trials_a, trials_b, t, metric, None, DEFAULT_CI_LEVEL)
}
