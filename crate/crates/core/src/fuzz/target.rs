//! Targets and their evaluation.
//!
//! The built-in targets are small programs written directly in Rust and
//! instrumented by hand: each basic block reports its id to a [`Tracer`],
//! which records AFL-style edges (previous block, current block) and keeps a
//! shadow call stack so crashes carry a normalized stack trace.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::observation::{CoverageProfile, Edge, Frame, Observation, StackTrace};
use crate::{Error, Result};

/// Number of builds in the versioned family (versions `0..VERSIONED_FAMILY_VERSIONS`).
pub const VERSIONED_FAMILY_VERSIONS: u32 = 8;

/// For each planted bug of the versioned family, the first version that fixes it.
/// Bug `b` is present in every version `< VERSIONED_FAMILY_FIXES[b]`.
pub const VERSIONED_FAMILY_FIXES: [u32; 4] = [1, 3, 5, 7];

/// Which program to fuzz.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTarget", into = "RawTarget")]
pub enum TargetSpec {
    /// One bug reachable through two branches (coverage dedup overcounts).
    BranchyCrash,
    /// One bug reachable through two callers (stack-hash depth sensitivity).
    SharedCrashPaths,
    /// A family of builds where each planted bug is fixed at a known version.
    VersionedFamily { version: u32 },
    /// An arbitrary executable taking the input file path as its first argument.
    ExternalSubprocess { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    BranchyCrash,
    SharedCrashPaths,
    VersionedFamily,
    ExternalSubprocess,
}

/// Wire form: `{"family": ..., "version"?: n, "path"?: s}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

impl TryFrom<RawTarget> for TargetSpec {
    type Error = String;

    fn try_from(raw: RawTarget) -> core::result::Result<Self, String> {
        let spec = match (raw.family, raw.version, raw.path) {
            (Family::BranchyCrash, None, None) => TargetSpec::BranchyCrash,
            (Family::SharedCrashPaths, None, None) => TargetSpec::SharedCrashPaths,
            (Family::VersionedFamily, Some(version), None) => TargetSpec::VersionedFamily { version },
            (Family::ExternalSubprocess, None, Some(path)) => TargetSpec::ExternalSubprocess { path },
            (family, _, _) => {
                return Err(format!(
                    "target {family:?}: `version` is required for versioned-family only, `path` for external-subprocess only"
                ))
            }
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl From<TargetSpec> for RawTarget {
    fn from(t: TargetSpec) -> Self {
        let (family, version, path) = match t {
            TargetSpec::BranchyCrash => (Family::BranchyCrash, None, None),
            TargetSpec::SharedCrashPaths => (Family::SharedCrashPaths, None, None),
            TargetSpec::VersionedFamily { version } => (Family::VersionedFamily, Some(version), None),
            TargetSpec::ExternalSubprocess { path } => (Family::ExternalSubprocess, None, Some(path)),
        };
        RawTarget { family, version, path }
    }
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::VersionedFamily { version } if *version >= VERSIONED_FAMILY_VERSIONS => {
                Err(Error::config(format!(
                    "versioned-family version {version} out of range 0..{VERSIONED_FAMILY_VERSIONS}"
                )))
            }
            TargetSpec::ExternalSubprocess { path } if path.is_empty() => {
                Err(Error::config("external-subprocess target needs a path"))
            }
            _ => Ok(()),
        }
    }

    /// Stable identifier used in trial records and file names.
    pub fn id(&self) -> String {
        match self {
            TargetSpec::BranchyCrash => "branchy-crash".to_string(),
            TargetSpec::SharedCrashPaths => "shared-crash-paths".to_string(),
            TargetSpec::VersionedFamily { version } => format!("versioned-family-v{version}"),
            TargetSpec::ExternalSubprocess { path } => format!("external:{path}"),
        }
    }

    /// Inverse of [`TargetSpec::id`].
    pub fn from_id(id: &str) -> Option<TargetSpec> {
        match id {
            "branchy-crash" => Some(TargetSpec::BranchyCrash),
            "shared-crash-paths" => Some(TargetSpec::SharedCrashPaths),
            _ => {
                if let Some(v) = id.strip_prefix("versioned-family-v") {
                    v.parse().ok().map(|version| TargetSpec::VersionedFamily { version })
                } else {
                    id.strip_prefix("external:").map(|p| TargetSpec::ExternalSubprocess {
                        path: p.to_string(),
                    })
                }
            }
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, TargetSpec::ExternalSubprocess { .. })
    }

    /// All builds of the versioned family, oldest first.
    pub fn versioned_family() -> Vec<TargetSpec> {
        (0..VERSIONED_FAMILY_VERSIONS)
            .map(|version| TargetSpec::VersionedFamily { version })
            .collect()
    }
}

/// Runs inputs against targets.
pub trait Executor: Sync {
    fn eval(&self, target: &TargetSpec, input: &[u8]) -> Result<Observation>;
}

/// Evaluates the built-in targets; rejects external ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinExecutor;

impl Executor for BuiltinExecutor {
    fn eval(&self, target: &TargetSpec, input: &[u8]) -> Result<Observation> {
        eval_builtin(target, input)
    }
}

/// Evaluates a built-in target. Deterministic apart from `duration_us`, which is left at 0.
pub fn eval_builtin(target: &TargetSpec, input: &[u8]) -> Result<Observation> {
    target.validate()?;
    let mut t = Tracer::new();
    let crash = match target {
        TargetSpec::BranchyCrash => branchy_main(&mut t, input),
        TargetSpec::SharedCrashPaths => shared_main(&mut t, input),
        TargetSpec::VersionedFamily { version } => versioned_main(&mut t, *version, input),
        TargetSpec::ExternalSubprocess { path } => {
            return Err(Error::Execution(format!(
                "external target {path} needs a subprocess executor"
            )))
        }
    };
    Ok(t.finish(crash))
}

/// Which planted bug of the versioned family an input triggers on version 0, if any.
pub fn versioned_planted_bug(input: &[u8]) -> Option<usize> {
    if input.len() < 2 || input[0] != b'#' {
        return None;
    }
    let bug = input[1].checked_sub(b'0').map(usize::from)?;
    if bug >= VERSIONED_FAMILY_FIXES.len() {
        return None;
    }
    let rest = &input[2..];
    (rest.len() >= bug && rest[..bug].iter().all(|&b| b == b'!')).then_some(bug)
}

struct Tracer {
    prev: u32,
    edges: CoverageProfile,
    // Call sites of the active frames, outermost first.
    calls: Vec<Frame>,
}

impl Tracer {
    fn new() -> Self {
        Self {
            prev: 0,
            edges: CoverageProfile::new(),
            calls: Vec::new(),
        }
    }

    fn block(&mut self, id: u32) {
        self.edges.insert(Edge(self.prev, id));
        self.prev = id;
    }

    fn call(&mut self, unit: &str, line: u32) {
        self.calls.push(Frame::new(unit, line));
    }

    fn ret(&mut self) {
        self.calls.pop();
    }

    /// Captures the stack with the faulting location innermost.
    fn fault(&self, unit: &str, line: u32) -> StackTrace {
        let mut frames = Vec::with_capacity(self.calls.len() + 1);
        frames.push(Frame::new(unit, line));
        frames.extend(self.calls.iter().rev().cloned());
        StackTrace::new(frames)
    }

    fn finish(self, crash: Option<StackTrace>) -> Observation {
        match crash {
            Some(trace) => Observation::crash(self.edges, trace),
            None => Observation::clean(self.edges),
        }
    }
}

// int main(int argc, char* argv[]) {
//   if (argc >= 2) {
//     char b = argv[1][0];
//     if (b == 'a') crash();
//     else          crash();
//   }
//   return 0;
// }
fn branchy_main(t: &mut Tracer, input: &[u8]) -> Option<StackTrace> {
    t.block(1);
    if let Some(&b) = input.first() {
        t.block(2);
        if b == b'a' {
            t.block(3);
            t.call("main", 4);
        } else {
            t.block(4);
            t.call("main", 5);
        }
        // crash() faults unconditionally and is not instrumented.
        return Some(t.fault("crash", 1));
    }
    t.block(5);
    None
}

// void f() { ... format(s1); ... }
// void g() { ... format(s2); ... }
// void format(char *s) { /* bug: corrupt s */ prepare(s); }
// void prepare(char *s) { output(s); }
// void output(char *s) { /* failure manifests */ }
//
// The first input byte picks the caller ('f' or 'g'); a '%' right after it
// makes format corrupt the string.
fn shared_main(t: &mut Tracer, input: &[u8]) -> Option<StackTrace> {
    t.block(1);
    let rest = input.get(1..).unwrap_or(&[]);
    let crash = match input.first() {
        Some(b'f') => {
            t.block(2);
            t.call("main", 13);
            let c = shared_caller(t, "f", 1, 10, rest);
            t.ret();
            c
        }
        Some(b'g') => {
            t.block(3);
            t.call("main", 14);
            let c = shared_caller(t, "g", 2, 11, rest);
            t.ret();
            c
        }
        _ => {
            t.block(4);
            None
        }
    };
    if crash.is_none() {
        t.block(5);
    }
    crash
}

fn shared_caller(t: &mut Tracer, name: &str, line: u32, block: u32, s: &[u8]) -> Option<StackTrace> {
    t.block(block);
    t.call(name, line);
    let c = shared_format(t, s);
    t.ret();
    c
}

fn shared_format(t: &mut Tracer, s: &[u8]) -> Option<StackTrace> {
    t.block(12);
    let corrupted = s.first() == Some(&b'%');
    if corrupted {
        t.block(13);
    }
    t.call("format", 5);
    t.block(14);
    t.call("prepare", 8);
    t.block(15);
    let c = if corrupted {
        t.block(16);
        Some(t.fault("output", 11))
    } else {
        t.block(17);
        None
    };
    t.ret();
    t.ret();
    c
}

// Input layout: '#', a digit selecting chunk handler b, then b '!' bytes.
// Handler b faults unless the build already contains the fix for bug b.
fn versioned_main(t: &mut Tracer, version: u32, input: &[u8]) -> Option<StackTrace> {
    t.block(1);
    if input.len() < 2 || input[0] != b'#' {
        t.block(4);
        return None;
    }
    t.block(2);
    let bug = match input[1].checked_sub(b'0') {
        Some(d) if usize::from(d) < VERSIONED_FAMILY_FIXES.len() => usize::from(d),
        _ => {
            t.block(3);
            return None;
        }
    };
    t.block(10 + bug as u32);
    t.call("dispatch", 20);
    let c = versioned_chunk(t, version, bug, &input[2..]);
    t.ret();
    c
}

fn versioned_chunk(t: &mut Tracer, version: u32, bug: usize, rest: &[u8]) -> Option<StackTrace> {
    let b = bug as u32;
    for i in 0..b {
        if rest.get(i as usize) != Some(&b'!') {
            t.block(60 + b);
            return None;
        }
        t.block(20 + 4 * b + i);
    }
    if version < VERSIONED_FAMILY_FIXES[bug] {
        t.block(40 + b);
        let unit = format!("chunk{bug}");
        Some(t.fault(&unit, 30 + b))
    } else {
        // The fix: a bounds check rejects the chunk.
        t.block(50 + b);
        None
    }
}
