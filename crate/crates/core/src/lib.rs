//! Core of a fuzzer evaluation harness.
//!
//! Everything here is `no_std` + `alloc`: the generic fuzzing loop and its
//! pluggable strategies, a suite of instrumented toy targets with planted
//! bugs, a simulated stochastic fuzzer, the three crash de-duplication
//! strategies, and the nonparametric statistics used to compare two fuzzers
//! over many trials. IO, threads, subprocess targets and file formats live in
//! the `fuzzeval` companion crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod campaign;
pub mod dedup;
mod error;
pub mod fuzz;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
