use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An input retained by the fuzzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    #[serde(with = "super::b64")]
    pub input: Vec<u8>,
    /// Index of the entry this one was mutated from; `None` for seeds.
    pub parent: Option<usize>,
    /// Seconds since trial start.
    pub discovered_at: f64,
    pub times_chosen: u64,
}

/// Candidate selection policy.
///
/// `Rarity` is a simple stand-in for a power schedule: it always picks the
/// entry chosen least often so far. It is not AFLFast's schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    #[default]
    RoundRobin,
    Rarity,
}

/// Stateful chooser; exactly one candidate per call.
#[derive(Debug, Clone, Default)]
pub struct Chooser {
    schedule: Schedule,
    cursor: usize,
}

impl Chooser {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule, cursor: 0 }
    }

    pub fn choose(&mut self, queue: &[QueueEntry]) -> Result<usize> {
        if queue.is_empty() {
            return Err(Error::Logic("choose called on an empty queue".into()));
        }
        Ok(match self.schedule {
            Schedule::RoundRobin => {
                let i = self.cursor % queue.len();
                self.cursor = i + 1;
                i
            }
            // min_by_key keeps the first minimum, i.e. the lowest index.
            Schedule::Rarity => queue
                .iter()
                .enumerate()
                .min_by_key(|(_, e)| e.times_chosen)
                .map(|(i, _)| i)
                .unwrap_or(0),
        })
    }
}
