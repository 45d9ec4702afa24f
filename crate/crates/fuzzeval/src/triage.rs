//! Clustering of a campaign's crashing inputs and comparison against ground truth.

use std::collections::{BTreeMap, BTreeSet};

use fuzzeval_core::campaign::{CampaignResult, Metric, TrialKey};
use fuzzeval_core::dedup::{dedup_report, hash_key, stack_hash, BugLabel, DedupTable, GroundTruth};
use fuzzeval_core::{Error, Result};

/// How crashes are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every crashing input is its own cluster.
    Raw,
    /// Crashes with identical edge sets share a cluster.
    Coverage,
    StackHash { frames: usize },
    GroundTruth,
}

impl Strategy {
    /// The counting metric used when comparing fuzzers under this strategy.
    pub fn metric(self) -> Metric {
        match self {
            Strategy::Raw => Metric::Raw,
            Strategy::Coverage => Metric::CovUnique,
            Strategy::StackHash { frames } => Metric::StackHash { frames },
            Strategy::GroundTruth => Metric::GroundTruthBugs,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Raw => "raw",
            Strategy::Coverage => "coverage",
            Strategy::StackHash { .. } => "stackhash",
            Strategy::GroundTruth => "groundtruth",
        }
    }
}

/// A crash is identified by its trial and its position in that trial.
pub type CrashId = (TrialKey, usize);

/// Triage of one target's crashes. Bug labels only mean something within a
/// single program, so targets are never pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct TriageOutcome {
    pub target_id: String,
    pub strategy: Strategy,
    pub crashes: usize,
    /// Cluster key and number of member crashes, sorted by key.
    pub clusters: BTreeMap<String, usize>,
    /// Present when every crash has a ground-truth label.
    pub table: Option<DedupTable>,
}

/// Triage per target, sorted by target id.
pub fn triage(result: &CampaignResult, strategy: Strategy, gt: &dyn GroundTruth) -> Result<Vec<TriageOutcome>> {
    let targets: BTreeSet<&str> = result.trials.keys().map(|k| k.target_id.as_str()).collect();
    targets.into_iter().map(|t| triage_target(result, t, strategy, gt)).collect()
}

pub fn triage_target(
    result: &CampaignResult,
    target_id: &str,
    strategy: Strategy,
    gt: &dyn GroundTruth,
) -> Result<TriageOutcome> {
    let mut assignment: BTreeMap<CrashId, String> = BTreeMap::new();
    let mut labels: Option<BTreeMap<CrashId, BugLabel>> = Some(BTreeMap::new());
    for (key, trial) in result.trials.iter().filter(|(k, _)| k.target_id == target_id) {
        for (i, event) in trial.crashes.iter().enumerate() {
            let id = (key.clone(), i);
            let label = match gt.label(&trial.target_id, event) {
                Ok(l) => Some(l),
                Err(Error::StrategyUnavailable(_)) if strategy != Strategy::GroundTruth => None,
                Err(e) => return Err(e),
            };
            let cluster = match strategy {
                Strategy::Raw => format!("{key}#{i}"),
                Strategy::Coverage => {
                    if event.profile.is_empty() {
                        return Err(Error::StrategyUnavailable(format!(
                            "crash {i} of trial {key} has no coverage profile"
                        )));
                    }
                    let edges: Vec<String> = event.profile.iter().map(|e| format!("{}-{}", e.0, e.1)).collect();
                    edges.join(" ")
                }
                Strategy::StackHash { frames } => hash_key(&stack_hash(&event.trace, frames)?),
                Strategy::GroundTruth => label.expect("ground truth was required").to_string(),
            };
            match (&mut labels, label) {
                (Some(map), Some(l)) => {
                    map.insert(id.clone(), l);
                }
                _ => labels = None,
            }
            assignment.insert(id, cluster);
        }
    }
    let mut clusters = BTreeMap::new();
    for c in assignment.values() {
        *clusters.entry(c.clone()).or_insert(0) += 1;
    }
    let table = match labels {
        Some(l) if !l.is_empty() => Some(dedup_report(&l, &assignment)?),
        _ => None,
    };
    Ok(TriageOutcome {
        target_id: target_id.to_string(),
        strategy,
        crashes: assignment.len(),
        clusters,
        table,
    })
}
