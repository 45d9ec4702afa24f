//! A stochastic stand-in for a fuzzer.
//!
//! Crash times come either from a fixed schedule or a homogeneous Poisson
//! process. Each crash gets a synthetic bug label drawn from a distribution;
//! the label is encoded into the crash's stack trace and coverage profile so
//! that every de-duplication strategy agrees with the synthetic ground truth:
//! label `i` (in sorted label order) gets the edge `(0, i + 1)` and an
//! innermost frame `bug:<label>` at line `i + 1`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::observation::{CoverageProfile, Edge, Frame, StackTrace};
use super::record::{CrashEvent, TrialRecord};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Target id recorded for simulated trials.
pub const SIMULATED_TARGET_ID: &str = "simulated";
/// Seed-config id recorded for simulated trials.
pub const SIMULATED_SEED_CONFIG_ID: &str = "none";

const LABEL_FRAME_PREFIX: &str = "bug:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CrashProcess {
    /// Crashes exactly at the listed times.
    DeterministicSchedule { schedule: Vec<f64> },
    /// Crashes per second.
    Poisson { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticProfile {
    #[serde(flatten)]
    pub process: CrashProcess,
    /// Synthetic bug label -> probability.
    pub label_distribution: BTreeMap<String, f64>,
}

impl StochasticProfile {
    pub fn poisson(rate: f64, labels: &[(&str, f64)]) -> Self {
        Self {
            process: CrashProcess::Poisson { rate },
            label_distribution: labels.iter().map(|&(l, p)| (String::from(l), p)).collect(),
        }
    }

    pub fn schedule(times: Vec<f64>, labels: &[(&str, f64)]) -> Self {
        Self {
            process: CrashProcess::DeterministicSchedule { schedule: times },
            label_distribution: labels.iter().map(|&(l, p)| (String::from(l), p)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.process {
            CrashProcess::Poisson { rate } if !(*rate >= 0.0 && rate.is_finite()) => {
                return Err(Error::config(format!("poisson rate {rate} must be finite and >= 0")));
            }
            CrashProcess::DeterministicSchedule { schedule } => {
                if schedule.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(Error::config("schedule times must be finite and >= 0"));
                }
                if schedule.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::config("schedule times must be sorted"));
                }
            }
            _ => {}
        }
        if self.label_distribution.is_empty() {
            return Err(Error::config("label distribution is empty"));
        }
        if self.label_distribution.values().any(|p| !(*p >= 0.0)) {
            return Err(Error::config("label probabilities must be >= 0"));
        }
        let total: f64 = self.label_distribution.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("label probabilities sum to {total}, not 1")));
        }
        Ok(())
    }
}

fn draw_label<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Label index and name encoded into a simulated crash's stack trace.
pub fn decode_synthetic_label(trace: &StackTrace) -> Option<(u32, &str)> {
    let f = trace.frames.first()?;
    let name = f.unit.strip_prefix(LABEL_FRAME_PREFIX)?;
    Some((f.line.checked_sub(1)?, name))
}

/// Produces one simulated trial.
pub fn simulated_fuzzer(
    profile: &StochasticProfile,
    fuzzer_id: &str,
    trial_index: u32,
    deadline: f64,
    rng_seed: u64,
) -> Result<TrialRecord> {
    profile.validate()?;
    if !(deadline >= 0.0 && deadline.is_finite()) {
        return Err(Error::config(format!("invalid deadline {deadline}")));
    }
    let mut rng = rng_from_seed(rng_seed);

    let times: Vec<f64> = match &profile.process {
        CrashProcess::DeterministicSchedule { schedule } => {
            schedule.iter().copied().filter(|&t| t <= deadline).collect()
        }
        CrashProcess::Poisson { rate } => {
            let mut out = Vec::new();
            if *rate > 0.0 {
                let mut t = 0.0;
                loop {
                    let u: f64 = rng.gen();
                    t += -libm::log(1.0 - u) / rate;
                    if t > deadline {
                        break;
                    }
                    out.push(t);
                }
            }
            out
        }
    };

    let labels: Vec<&String> = profile.label_distribution.keys().collect();
    let mut acc = 0.0;
    let cdf: Vec<f64> = profile
        .label_distribution
        .values()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();

    let mut seen = BTreeSet::new();
    let mut crashes = Vec::with_capacity(times.len());
    let mut coverage_growth = Vec::new();
    for at in times {
        let idx = draw_label(&cdf, &mut rng);
        let label = labels[idx];
        let line = idx as u32 + 1;
        if seen.insert(idx) {
            coverage_growth.push((at, seen.len() as u64));
        }
        crashes.push(CrashEvent {
            at,
            input: label.as_bytes().to_vec(),
            profile: CoverageProfile::from_iter([Edge(0, line)]),
            trace: StackTrace::new(alloc::vec![
                Frame::new(format!("{LABEL_FRAME_PREFIX}{label}"), line),
                Frame::new("simulated", 1),
            ]),
        });
    }

    Ok(TrialRecord {
        fuzzer_id: String::from(fuzzer_id),
        target_id: String::from(SIMULATED_TARGET_ID),
        seed_config_id: String::from(SIMULATED_SEED_CONFIG_ID),
        trial_index,
        rng_seed,
        deadline,
        executions: crashes.len() as u64,
        crashes,
        coverage_growth,
    })
}
