//! Std harness for fuzzer evaluation: subprocess targets, the parallel
//! campaign runner, on-disk results, CSV/SVG reports and the CLI.

pub mod cli;
mod error;
pub mod report;
pub mod runner;
pub mod seeds;
pub mod store;
pub mod subprocess;
pub mod triage;

pub use error::{HarnessError, Result};
pub use runner::{run_campaign, HarnessExecutor, WallClock};
