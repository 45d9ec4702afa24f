//! Deterministic random number plumbing.
//!
//! Every trial gets its own generator seeded from a 64-bit value. Campaign
//! trial seeds are derived with [`derive_seed`], a counter-mix over the
//! master seed and the trial's coordinates, so the seed of a trial never
//! depends on scheduling order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by the fuzzing loop, mutators and simulations.
pub type FuzzRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> FuzzRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a trial seed from the master seed and the trial's cell.
///
/// `h0 = splitmix64(master)`, then each component is folded in as
/// `h = splitmix64(h ^ fnv1a(component))`, with the trial index folded last
/// as `h = splitmix64(h ^ index)`.
pub fn derive_seed(master: u64, fuzzer: &str, target: &str, seed_config: &str, trial: u32) -> u64 {
    let mut h = splitmix64(master);
    for part in [fuzzer, target, seed_config] {
        h = splitmix64(h ^ fnv1a(part.as_bytes()));
    }
    splitmix64(h ^ u64::from(trial))
}
