use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A control-flow edge: two basic-block ids executed directly in sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub u32, pub u32);

/// The set of edges exercised by one execution.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageProfile {
    edges: BTreeSet<Edge>,
}

impl CoverageProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, edge: Edge) -> bool {
        self.edges.insert(edge)
    }

    pub fn contains(&self, edge: &Edge) -> bool {
        self.edges.contains(edge)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }
}

impl FromIterator<Edge> for CoverageProfile {
    fn from_iter<I: IntoIterator<Item = Edge>>(iter: I) -> Self {
        Self {
            edges: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a CoverageProfile {
    type Item = &'a Edge;
    type IntoIter = alloc::collections::btree_set::Iter<'a, Edge>;

    fn into_iter(self) -> Self::IntoIter {
        self.edges.iter()
    }
}

/// A normalized source location: no raw addresses, just unit and line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub unit: String,
    pub line: u32,
}

impl Frame {
    pub fn new(unit: impl Into<String>, line: u32) -> Self {
        Self {
            unit: unit.into(),
            line,
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.unit, self.line)
    }
}

/// Call stack at the crash site, innermost frame first.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StackTrace {
    pub frames: Vec<Frame>,
}

impl StackTrace {
    pub fn new(frames: Vec<Frame>) -> Self {
        Self { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Result of evaluating one input on a target.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub crashed: bool,
    pub edges: CoverageProfile,
    /// Present iff `crashed`.
    pub trace: Option<StackTrace>,
    /// Execution wall time in microseconds.
    pub duration_us: u64,
}

impl Observation {
    pub fn clean(edges: CoverageProfile) -> Self {
        Self {
            crashed: false,
            edges,
            trace: None,
            duration_us: 0,
        }
    }

    pub fn crash(edges: CoverageProfile, trace: StackTrace) -> Self {
        Self {
            crashed: true,
            edges,
            trace: Some(trace),
            duration_us: 0,
        }
    }

    /// Equality ignoring `duration_us`.
    pub fn same_behavior(&self, other: &Observation) -> bool {
        self.crashed == other.crashed && self.edges == other.edges && self.trace == other.trace
    }
}
