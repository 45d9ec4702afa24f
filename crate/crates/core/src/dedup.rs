//! Crash de-duplication.
//!
//! Three ways to decide that two crashing inputs are "the same bug":
//!
//! * coverage profiles, with AFL's on-line uniqueness rule and the offline
//!   `afl-cmin` pruning rule ([`coverage_unique_online`], [`cmin`]);
//! * stack hashes over the innermost N frames ([`stack_hash`]);
//! * ground truth, by replaying each input on a sequence of builds that fix
//!   bugs one by one ([`triage_versions`]).
//!
//! [`dedup_report`] scores a heuristic clustering against ground-truth labels.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::fuzz::{CoverageProfile, CrashEvent, Edge, Executor, Frame, StackTrace, TargetSpec};
use crate::{Error, Result};

/// Frames hashed when no depth is given.
pub const DEFAULT_STACK_FRAMES: usize = 3;

fn require_coverage<'a>(profiles: impl IntoIterator<Item = &'a CoverageProfile>) -> Result<()> {
    if profiles.into_iter().any(CoverageProfile::is_empty) {
        return Err(Error::StrategyUnavailable(
            "coverage de-duplication needs non-empty coverage profiles (external targets report none)".into(),
        ));
    }
    Ok(())
}

/// AFL's on-line rule over crash profiles in discovery order.
///
/// A crash is unique if its profile has an edge absent from every earlier
/// crash, or lacks an edge present in all earlier crashes. "Earlier crashes"
/// includes those that were themselves judged duplicates.
pub fn coverage_unique_flags(profiles: &[&CoverageProfile]) -> Result<Vec<bool>> {
    require_coverage(profiles.iter().copied())?;
    let mut union: BTreeSet<Edge> = BTreeSet::new();
    let mut common: Option<BTreeSet<Edge>> = None;
    let mut flags = Vec::with_capacity(profiles.len());
    for p in profiles {
        let unique = match &common {
            None => true,
            Some(common) => {
                p.iter().any(|e| !union.contains(e)) || common.iter().any(|e| !p.contains(e))
            }
        };
        flags.push(unique);
        union.extend(p.iter().copied());
        common = Some(match common {
            None => p.edges().clone(),
            Some(c) => c.intersection(p.edges()).copied().collect(),
        });
    }
    Ok(flags)
}

/// [`coverage_unique_flags`] over a trial's crash events.
pub fn coverage_unique_online(events: &[CrashEvent]) -> Result<Vec<bool>> {
    if events.windows(2).any(|w| w[0].at > w[1].at) {
        return Err(Error::arg("crash events must be ordered by time"));
    }
    let profiles: Vec<&CoverageProfile> = events.iter().map(|e| &e.profile).collect();
    coverage_unique_flags(&profiles)
}

/// Corpus minimization; returns retained indices in corpus order.
///
/// Phase 1 is `afl-cmin`'s rule: keep every input owning an edge no other
/// input covers. Phase 2 is an extension of that rule: walk the corpus in
/// order and add any input that still contributes an uncovered edge, so the
/// retained set always covers the corpus's full edge union.
pub fn cmin(profiles: &[CoverageProfile]) -> Result<Vec<usize>> {
    require_coverage(profiles)?;
    let mut owners: BTreeMap<Edge, usize> = BTreeMap::new();
    for p in profiles {
        for e in p {
            *owners.entry(*e).or_default() += 1;
        }
    }
    let mut keep = alloc::vec![false; profiles.len()];
    let mut covered: BTreeSet<Edge> = BTreeSet::new();
    for (i, p) in profiles.iter().enumerate() {
        if p.iter().any(|e| owners[e] == 1) {
            keep[i] = true;
            covered.extend(p.iter().copied());
        }
    }
    for (i, p) in profiles.iter().enumerate() {
        if covered.len() == owners.len() {
            break;
        }
        if !keep[i] && p.iter().any(|e| !covered.contains(e)) {
            keep[i] = true;
            covered.extend(p.iter().copied());
        }
    }
    Ok((0..profiles.len()).filter(|&i| keep[i]).collect())
}

/// Stack hash: the innermost frames themselves, kept verbatim so equality is
/// exact frame-list equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HashId(Vec<Frame>);

impl HashId {
    pub fn frames(&self) -> &[Frame] {
        &self.0
    }
}

impl fmt::Display for HashId {
    /// Canonical text: frames joined by `|`, with `\`, `|` and `:` in unit names escaped.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, frame) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for ch in frame.unit.chars() {
                if matches!(ch, '\\' | '|' | ':') {
                    f.write_str("\\")?;
                }
                write!(f, "{ch}")?;
            }
            write!(f, ":{}", frame.line)?;
        }
        Ok(())
    }
}

/// Hash of the `min(n, len)` innermost frames.
pub fn stack_hash(trace: &StackTrace, n: usize) -> Result<HashId> {
    if n == 0 {
        return Err(Error::arg("stack hash needs at least one frame"));
    }
    if trace.is_empty() {
        return Err(Error::arg("cannot hash an empty stack trace"));
    }
    Ok(HashId(trace.frames.iter().take(n).cloned().collect()))
}

/// Ground-truth identity of a crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "version", rename_all = "kebab-case")]
pub enum BugLabel {
    /// The bug fixed by this version index.
    FixedBy(u32),
    /// Still crashes on the newest version.
    Unfixed,
    /// The crash pattern over versions is not a single clean fix.
    Unknown,
}

impl fmt::Display for BugLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BugLabel::FixedBy(v) => write!(f, "fixed-by-{v}"),
            BugLabel::Unfixed => f.write_str("unfixed"),
            BugLabel::Unknown => f.write_str("unknown"),
        }
    }
}

/// Labels one input from its crash/no-crash pattern across versions.
pub fn label_from_pattern(crashes: &[bool]) -> Result<BugLabel> {
    if crashes.first() != Some(&true) {
        return Err(Error::arg("input does not crash the first version"));
    }
    Ok(match crashes.iter().position(|c| !c) {
        None => BugLabel::Unfixed,
        Some(v) if crashes[v..].iter().any(|&c| c) => BugLabel::Unknown,
        Some(v) => BugLabel::FixedBy(v as u32),
    })
}

/// Replays each input on every version (oldest first) and labels it with the
/// version that fixed it.
///
/// Labels are version indices into `versions`. An input that stops crashing
/// and later crashes again is `Unknown`; one that crashes everywhere is
/// `Unfixed`. Inputs must crash version 0.
pub fn triage_versions<E: Executor + ?Sized>(
    executor: &E,
    inputs: &[Vec<u8>],
    versions: &[TargetSpec],
) -> Result<Vec<BugLabel>> {
    if versions.is_empty() {
        return Err(Error::arg("no versions to triage against"));
    }
    inputs
        .iter()
        .enumerate()
        .map(|(i, input)| {
            let pattern = versions
                .iter()
                .map(|v| executor.eval(v, input).map(|o| o.crashed))
                .collect::<Result<Vec<bool>>>()?;
            label_from_pattern(&pattern).map_err(|_| {
                Error::arg(format!("input {i} does not crash version 0 ({})", versions[0].id()))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupRow {
    pub label: BugLabel,
    /// Distinct clusters (hashes) among this label's inputs.
    pub hashes: usize,
    /// Hashes seen under this label only.
    pub matches: usize,
    /// Hashes also seen under some other label.
    pub false_matches: usize,
    pub inputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupTable {
    pub rows: Vec<DedupRow>,
    pub distinct_hashes: usize,
    /// Distinct `FixedBy` labels.
    pub distinct_bugs: usize,
    /// `distinct_hashes / distinct_bugs`; `None` without any fixed bug.
    pub overcount_factor: Option<f64>,
    /// Fraction of hashes that appear under more than one label.
    pub non_unique_fraction: f64,
}

impl DedupTable {
    pub fn corpus_size(&self) -> usize {
        self.rows.iter().map(|r| r.inputs).sum()
    }
}

/// Compares a clustering (`hashes`) with ground truth (`labels`), keyed by input.
pub fn dedup_report<K: Ord, H: Ord>(labels: &BTreeMap<K, BugLabel>, hashes: &BTreeMap<K, H>) -> Result<DedupTable> {
    if labels.is_empty() {
        return Err(Error::arg("empty corpus"));
    }
    if labels.len() != hashes.len() || labels.keys().zip(hashes.keys()).any(|(a, b)| a != b) {
        return Err(Error::arg("label and hash mappings cover different inputs"));
    }
    let mut per_label: BTreeMap<BugLabel, (BTreeSet<&H>, usize)> = BTreeMap::new();
    let mut labels_of_hash: BTreeMap<&H, BTreeSet<BugLabel>> = BTreeMap::new();
    for (key, label) in labels {
        let h = &hashes[key];
        let entry = per_label.entry(*label).or_default();
        entry.0.insert(h);
        entry.1 += 1;
        labels_of_hash.entry(h).or_default().insert(*label);
    }
    let rows = per_label
        .iter()
        .map(|(label, (hs, inputs))| {
            let matches = hs.iter().filter(|h| labels_of_hash[*h].len() == 1).count();
            DedupRow {
                label: *label,
                hashes: hs.len(),
                matches,
                false_matches: hs.len() - matches,
                inputs: *inputs,
            }
        })
        .collect();
    let distinct_hashes = labels_of_hash.len();
    let distinct_bugs = per_label.keys().filter(|l| matches!(l, BugLabel::FixedBy(_))).count();
    let shared = labels_of_hash.values().filter(|ls| ls.len() > 1).count();
    Ok(DedupTable {
        rows,
        distinct_hashes,
        distinct_bugs,
        overcount_factor: (distinct_bugs > 0).then(|| distinct_hashes as f64 / distinct_bugs as f64),
        non_unique_fraction: shared as f64 / distinct_hashes as f64,
    })
}

/// A label for the single planted bug of the two-path toy targets.
pub const PLANTED_BUG: BugLabel = BugLabel::FixedBy(1);

/// Ground truth for crashes recorded on a given target.
pub trait GroundTruth {
    fn label(&self, target_id: &str, event: &CrashEvent) -> Result<BugLabel>;
}

/// Ground truth known by construction for every built-in target and for
/// simulated trials.
///
/// * branchy-crash and shared-crash-paths each contain one planted bug,
///   reported as [`PLANTED_BUG`];
/// * versioned-family crashes are labeled by [`triage_versions`] over the
///   builds newer than the fuzzed one;
/// * simulated crashes carry their label in the stack trace (label index
///   `i` becomes `FixedBy(i + 1)`).
#[derive(Debug, Clone, Copy)]
pub struct BuiltinGroundTruth<'a, E: Executor + ?Sized> {
    pub executor: &'a E,
}

impl<E: Executor + ?Sized> GroundTruth for BuiltinGroundTruth<'_, E> {
    fn label(&self, target_id: &str, event: &CrashEvent) -> Result<BugLabel> {
        if target_id == crate::fuzz::simulated::SIMULATED_TARGET_ID {
            return crate::fuzz::decode_synthetic_label(&event.trace)
                .map(|(idx, _)| BugLabel::FixedBy(idx + 1))
                .ok_or_else(|| Error::arg("simulated crash without a synthetic label"));
        }
        match TargetSpec::from_id(target_id) {
            Some(TargetSpec::BranchyCrash | TargetSpec::SharedCrashPaths) => Ok(PLANTED_BUG),
            Some(TargetSpec::VersionedFamily { version }) => {
                let versions: Vec<TargetSpec> = TargetSpec::versioned_family()
                    .into_iter()
                    .skip(version as usize)
                    .collect();
                let label = triage_versions(self.executor, core::slice::from_ref(&event.input), &versions)?[0];
                // Report version indices of the whole family, not of the suffix.
                Ok(match label {
                    BugLabel::FixedBy(v) => BugLabel::FixedBy(v + version),
                    other => other,
                })
            }
            _ => Err(Error::StrategyUnavailable(format!("no ground truth for target {target_id}"))),
        }
    }
}

/// Convenience: labels for every event, in order.
pub fn label_events<G: GroundTruth + ?Sized>(gt: &G, target_id: &str, events: &[CrashEvent]) -> Result<Vec<BugLabel>> {
    events.iter().map(|e| gt.label(target_id, e)).collect()
}

/// Display helper for cluster keys that are plain strings.
pub fn hash_key(id: &HashId) -> String {
    format!("{id}")
}
