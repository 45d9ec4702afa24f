use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::observation::{CoverageProfile, StackTrace};

/// One crashing execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashEvent {
    /// Seconds since trial start.
    pub at: f64,
    #[serde(with = "super::b64")]
    pub input: Vec<u8>,
    pub profile: CoverageProfile,
    pub trace: StackTrace,
}

/// Everything one fuzzing trial produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub fuzzer_id: String,
    pub target_id: String,
    pub seed_config_id: String,
    pub trial_index: u32,
    pub rng_seed: u64,
    pub deadline: f64,
    /// Sorted by `at`.
    pub crashes: Vec<CrashEvent>,
    /// `(seconds, cumulative distinct edges)`, strictly increasing in edges.
    pub coverage_growth: Vec<(f64, u64)>,
    pub executions: u64,
}

impl TrialRecord {
    /// Checks the ordering and range invariants of a record, e.g. one read from disk.
    pub fn check_invariants(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::arg(alloc::format!("trial record {}: {m}", self.key_string())));
        if !(self.deadline >= 0.0) {
            return bad("negative deadline");
        }
        if self.crashes.windows(2).any(|w| w[0].at > w[1].at) {
            return bad("crash events out of order");
        }
        if self.crashes.iter().any(|c| !(c.at >= 0.0 && c.at <= self.deadline)) {
            return bad("crash time outside [0, deadline]");
        }
        if self
            .coverage_growth
            .windows(2)
            .any(|w| w[0].0 > w[1].0 || w[0].1 >= w[1].1)
        {
            return bad("coverage growth not monotone");
        }
        Ok(())
    }

    pub fn key_string(&self) -> String {
        alloc::format!(
            "{}/{}/{}/{}",
            self.fuzzer_id, self.target_id, self.seed_config_id, self.trial_index
        )
    }
}
