//! The fuzzing side: observations, targets, strategies, the main loop and a
//! simulated fuzzer.

mod b64;
pub mod engine;
pub mod mutate;
pub mod observation;
pub mod queue;
pub mod record;
pub mod seeds;
pub mod simulated;
pub mod target;

pub use engine::{
    is_interesting, run_fuzz_loop, run_fuzz_loop_with_clock, Clock, FuzzLoop, LoopConfig, Mode, ObservationSet,
    Timing, TrialSetup, VirtualClock,
};
pub use mutate::{mutate, Mutation, MutationKind, DEFAULT_MAX_INPUT_SIZE};
pub use observation::{CoverageProfile, Edge, Frame, Observation, StackTrace};
pub use queue::{Chooser, QueueEntry, Schedule};
pub use record::{CrashEvent, TrialRecord};
pub use seeds::{init_inline_seed_corpus, init_seed_corpus, SeedConfig, SeedSource};
pub use simulated::{decode_synthetic_label, simulated_fuzzer, CrashProcess, StochasticProfile};
pub use target::{eval_builtin, BuiltinExecutor, Executor, TargetSpec};
