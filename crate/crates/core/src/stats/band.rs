use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{median_ci, CrashTimeSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub time: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Per-grid-time summary of many trials: median, extremes and median CI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub level: f64,
    pub rows: Vec<BandRow>,
}

/// Summarizes trials on a time grid using step-function counts.
pub fn aggregate_band(trials: &[CrashTimeSeries], grid: &[f64], level: f64) -> Result<Band> {
    if trials.is_empty() {
        return Err(Error::arg("no trials to aggregate"));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg("band grid must be sorted and finite"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut counts = Vec::with_capacity(trials.len());
    for &t in grid {
        counts.clear();
        counts.extend(trials.iter().map(|s| s.count_at(t) as f64));
        let ci = median_ci(&counts, level)?;
        let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
        let max = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        rows.push(BandRow {
            time: t,
            median: ci.median,
            min,
            max,
            ci_lo: ci.lo,
            ci_hi: ci.hi,
        });
    }
    Ok(Band { level, rows })
}
