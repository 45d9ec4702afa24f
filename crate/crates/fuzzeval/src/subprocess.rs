//! Runs an external executable on one input and classifies the outcome.
//!
//! The input is written to a temporary file whose path is passed as the
//! first argument. A run is a crash when the process dies from SIGSEGV,
//! SIGABRT, SIGILL, SIGFPE or SIGBUS, or when its standard error carries an
//! AddressSanitizer or UBSan report. Processes that outlive the hang limit
//! are killed along with their process group and count as non-crashing. Coverage is never observed.

use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use fuzzeval_core::fuzz::{CoverageProfile, Frame, Observation, StackTrace};
use fuzzeval_core::{Error, Result};

pub const DEFAULT_HANG_LIMIT: Duration = Duration::from_secs(1);
const POLL_INTERVAL: Duration = Duration::from_millis(1);

#[derive(Debug, Clone)]
pub struct ProcessExecutor {
    pub hang_limit: Duration,
}

impl Default for ProcessExecutor {
    fn default() -> Self {
        Self {
            hang_limit: DEFAULT_HANG_LIMIT,
        }
    }
}

/// How one run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub signal: Option<i32>,
    pub exit_code: Option<i32>,
    pub timed_out: bool,
    pub stderr: String,
    pub duration: Duration,
}

impl ProcessExecutor {
    pub fn run(&self, path: &str, input: &[u8]) -> Result<RunOutcome> {
        let mut file = tempfile::NamedTempFile::new().map_err(|e| Error::Execution(format!("temp file: {e}")))?;
        file.write_all(input)
            .and_then(|()| file.flush())
            .map_err(|e| Error::Execution(format!("temp file: {e}")))?;

        let start = Instant::now();
        let mut child = Command::new(path)
            .arg(file.path())
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .process_group(0)
            .spawn()
            .map_err(|e| Error::Execution(format!("cannot spawn {path}: {e}")))?;

        let mut pipe = child.stderr.take().expect("stderr is piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = pipe.read_to_end(&mut buf);
            buf
        });

        let mut timed_out = false;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if start.elapsed() >= self.hang_limit => {
                    timed_out = true;
                    kill_group(child.id());
                    break child.wait().map_err(|e| Error::Execution(format!("wait on {path}: {e}")))?;
                }
                Ok(None) => std::thread::sleep(POLL_INTERVAL),
                Err(e) => return Err(Error::Execution(format!("wait on {path}: {e}"))),
            }
        };
        let duration = start.elapsed();
        let stderr = reader.join().unwrap_or_default();
        Ok(RunOutcome {
            signal: status.signal(),
            exit_code: status.code(),
            timed_out,
            stderr: String::from_utf8_lossy(&stderr).into_owned(),
            duration,
        })
    }

    pub fn eval(&self, path: &str, input: &[u8]) -> Result<Observation> {
        let outcome = self.run(path, input)?;
        let mut obs = match classify(&outcome) {
            Some(trace) => Observation::crash(CoverageProfile::new(), trace),
            None => Observation::clean(CoverageProfile::new()),
        };
        obs.duration_us = u64::try_from(outcome.duration.as_micros()).unwrap_or(u64::MAX);
        Ok(obs)
    }
}

// Descendants may hold the stderr pipe open, so the whole group goes.
fn kill_group(pid: u32) {
    if let Ok(pid) = libc::pid_t::try_from(pid) {
        // SAFETY: kill(2) has no memory-safety preconditions; the child leads its own group.
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }
}

pub fn crash_signal_name(signal: i32) -> Option<&'static str> {
    Some(match signal {
        libc::SIGSEGV => "SIGSEGV",
        libc::SIGABRT => "SIGABRT",
        libc::SIGILL => "SIGILL",
        libc::SIGFPE => "SIGFPE",
        libc::SIGBUS => "SIGBUS",
        _ => return None,
    })
}

/// The crash trace of a run, or `None` if it did not crash.
pub fn classify(outcome: &RunOutcome) -> Option<StackTrace> {
    if outcome.timed_out {
        return None;
    }
    let report = sanitizer_report(&outcome.stderr);
    let signal = outcome.signal.and_then(crash_signal_name);
    if report.is_none() && signal.is_none() {
        return None;
    }
    let frames = parse_frames(&outcome.stderr);
    if !frames.is_empty() {
        return Some(StackTrace::new(frames));
    }
    let fallback = match (report, signal) {
        (Some(SanitizerReport::Ubsan { file, line }), _) => Frame::new(file, line),
        (Some(SanitizerReport::Asan), _) => Frame::new("sanitizer", 0),
        (None, Some(name)) => Frame::new(format!("signal:{name}"), 0),
        (None, None) => unreachable!(),
    };
    Some(StackTrace::new(vec![fallback]))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SanitizerReport {
    Asan,
    Ubsan { file: String, line: u32 },
}

/// Finds the first sanitizer error line in `stderr`.
pub fn sanitizer_report(stderr: &str) -> Option<SanitizerReport> {
    stderr.lines().find_map(|line| {
        let line = strip_pid_prefix(line.trim_start());
        if line.starts_with("ERROR: AddressSanitizer") {
            return Some(SanitizerReport::Asan);
        }
        let (location, rest) = split_location_prefix(line);
        rest.starts_with("runtime error:").then(|| match location {
            Some((file, line)) => SanitizerReport::Ubsan {
                file: file.to_string(),
                line,
            },
            None => SanitizerReport::Ubsan {
                file: "sanitizer".to_string(),
                line: 0,
            },
        })
    })
}

// "==1234==ERROR: ..." -> "ERROR: ..."
fn strip_pid_prefix(line: &str) -> &str {
    let Some(rest) = line.strip_prefix("==") else {
        return line;
    };
    match rest.find("==") {
        Some(end) if end > 0 && rest[..end].bytes().all(|b| b.is_ascii_digit()) => &rest[end + 2..],
        _ => line,
    }
}

// "file.c:12:3: runtime error: ..." -> (Some(("file.c", 12)), "runtime error: ...")
fn split_location_prefix(line: &str) -> (Option<(&str, u32)>, &str) {
    let Some(idx) = line.find(": ") else {
        return (None, line);
    };
    let (prefix, rest) = (&line[..idx], &line[idx + 2..]);
    let mut parts = prefix.rsplitn(3, ':');
    let (Some(col), Some(ln), Some(file)) = (parts.next(), parts.next(), parts.next()) else {
        return (None, line);
    };
    match (col.parse::<u32>(), ln.parse::<u32>()) {
        (Ok(_), Ok(n)) if !file.is_empty() => (Some((file, n)), rest),
        _ => (None, line),
    }
}

/// Parses symbolized sanitizer frames (`#N 0xADDR in func file:line:col`) of
/// the first reported stack, innermost first.
pub fn parse_frames(stderr: &str) -> Vec<Frame> {
    let mut frames = Vec::new();
    for line in stderr.lines() {
        let mut words = line.split_whitespace();
        let Some(index) = words.next().and_then(|w| w.strip_prefix('#')) else {
            if !frames.is_empty() {
                break;
            }
            continue;
        };
        let Ok(index) = index.parse::<usize>() else { continue };
        if index != frames.len() {
            // A second stack (e.g. the allocation site) starts over at #0.
            break;
        }
        let (Some(_addr), Some("in"), Some(func)) = (words.next(), words.next(), words.next()) else {
            frames.push(Frame::new("??", 0));
            continue;
        };
        let line_no = words.next().map_or(0, location_line);
        frames.push(Frame::new(func, line_no));
    }
    frames
}

fn location_line(location: &str) -> u32 {
    if location.starts_with('(') {
        return 0;
    }
    let mut parts = location.rsplitn(3, ':');
    let last = parts.next();
    let second = parts.next();
    match (second.map(str::parse::<u32>), last.map(str::parse::<u32>)) {
        (Some(Ok(line)), Some(Ok(_col))) => line,
        (_, Some(Ok(line))) => line,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ASAN: &str = "\
=================================================================
==4242==ERROR: AddressSanitizer: heap-buffer-overflow on address 0x602000000011
READ of size 1 at 0x602000000011 thread T0
    #0 0x4f1a2b in output /src/shared.c:11:5
    #1 0x4f1b3c in prepare /src/shared.c:8:3
    #2 0x4f1c4d in format /src/shared.c:5:3
    #3 0x4f1d5e in f /src/shared.c:1:14
    #4 0x7f0000 in __libc_start_main (/lib/x86_64-linux-gnu/libc.so.6+0x21b96)

0x602000000011 is located 0 bytes to the right of 1-byte region
allocated by thread T0 here:
    #0 0x4a0b1c in malloc
    #1 0x4f1e6f in main /src/shared.c:13:3
";

    #[test]
    fn parses_asan_report() {
        assert_eq!(sanitizer_report(ASAN), Some(SanitizerReport::Asan));
        let frames = parse_frames(ASAN);
        let shown: Vec<String> = frames.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["output:11", "prepare:8", "format:5", "f:1", "__libc_start_main:0"]);
    }

    #[test]
    fn parses_ubsan_line() {
        let err = "src/x.c:7:12: runtime error: signed integer overflow\n";
        assert_eq!(
            sanitizer_report(err),
            Some(SanitizerReport::Ubsan {
                file: "src/x.c".into(),
                line: 7
            })
        );
        assert_eq!(sanitizer_report("runtime error: bad\n").is_some(), true);
        assert_eq!(sanitizer_report("note: runtime error: mentioned\n"), None);
        assert_eq!(sanitizer_report("WARNING: AddressSanitizer failed\n"), None);
    }

    #[test]
    fn signals_and_hangs() {
        let base = RunOutcome {
            signal: Some(libc::SIGSEGV),
            exit_code: None,
            timed_out: false,
            stderr: String::new(),
            duration: Duration::ZERO,
        };
        assert_eq!(classify(&base).unwrap().frames[0].to_string(), "signal:SIGSEGV:0");
        let killed = RunOutcome {
            signal: Some(libc::SIGKILL),
            ..base.clone()
        };
        assert!(classify(&killed).is_none());
        let hang = RunOutcome {
            timed_out: true,
            ..base.clone()
        };
        assert!(classify(&hang).is_none());
        let clean = RunOutcome {
            signal: None,
            exit_code: Some(1),
            ..base
        };
        assert!(classify(&clean).is_none());
    }
}
