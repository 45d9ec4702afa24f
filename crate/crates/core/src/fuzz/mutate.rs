//! Byte-level mutation operators.
//!
//! One operator is applied per call, picked uniformly among the operators
//! that are legal for the candidate's length.

use alloc::vec::Vec;

use rand::Rng;

/// Largest input the mutator will produce unless configured otherwise.
pub const DEFAULT_MAX_INPUT_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    BitFlip,
    ByteReplace,
    ByteInsert,
    ByteDelete,
    Truncate,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::BitFlip,
        MutationKind::ByteReplace,
        MutationKind::ByteInsert,
        MutationKind::ByteDelete,
        MutationKind::Truncate,
    ];
}

/// A fully determined edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    BitFlip { pos: usize, bit: u8 },
    ByteReplace { pos: usize, byte: u8 },
    ByteInsert { pos: usize, byte: u8 },
    ByteDelete { pos: usize },
    Truncate { len: usize },
}

impl Mutation {
    /// Applies the edit. Positions past the end are clamped so the edit stays
    /// well defined; an edit with nothing to act on returns the input unchanged.
    pub fn apply(&self, input: &[u8]) -> Vec<u8> {
        let mut out = input.to_vec();
        match *self {
            Mutation::BitFlip { pos, bit } => {
                if let Some(b) = out.get_mut(pos) {
                    *b ^= 1 << (bit & 7);
                }
            }
            Mutation::ByteReplace { pos, byte } => {
                if let Some(b) = out.get_mut(pos) {
                    *b = byte;
                }
            }
            Mutation::ByteInsert { pos, byte } => out.insert(pos.min(out.len()), byte),
            Mutation::ByteDelete { pos } => {
                if pos < out.len() {
                    out.remove(pos);
                }
            }
            Mutation::Truncate { len } => out.truncate(len),
        }
        out
    }
}

/// Operators that can act on an input of `len` bytes without exceeding `max_size`.
pub fn legal_kinds(len: usize, max_size: usize) -> Vec<MutationKind> {
    if len > max_size {
        return alloc::vec![MutationKind::Truncate];
    }
    MutationKind::ALL
        .into_iter()
        .filter(|k| match k {
            MutationKind::ByteInsert => len < max_size,
            _ => len > 0,
        })
        .collect()
}

/// Draws a concrete edit of the given kind for an input of `len` bytes.
pub fn draw_mutation<R: Rng + ?Sized>(kind: MutationKind, len: usize, max_size: usize, rng: &mut R) -> Mutation {
    match kind {
        MutationKind::BitFlip => Mutation::BitFlip {
            pos: rng.gen_range(0..len),
            bit: rng.gen_range(0..8),
        },
        MutationKind::ByteReplace => Mutation::ByteReplace {
            pos: rng.gen_range(0..len),
            byte: rng.gen(),
        },
        MutationKind::ByteInsert => Mutation::ByteInsert {
            pos: rng.gen_range(0..=len),
            byte: rng.gen(),
        },
        MutationKind::ByteDelete => Mutation::ByteDelete {
            pos: rng.gen_range(0..len),
        },
        MutationKind::Truncate => Mutation::Truncate {
            len: rng.gen_range(0..len.min(max_size + 1)),
        },
    }
}

/// Produces a new candidate from `candidate`; the result never exceeds `max_size` bytes.
pub fn mutate<R: Rng + ?Sized>(candidate: &[u8], max_size: usize, rng: &mut R) -> Vec<u8> {
    let kinds = legal_kinds(candidate.len(), max_size);
    let Some(&kind) = kinds.get(rng.gen_range(0..kinds.len().max(1))) else {
        return candidate.to_vec();
    };
    draw_mutation(kind, candidate.len(), max_size, rng).apply(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn empty_input_only_allows_insert() {
        assert_eq!(legal_kinds(0, DEFAULT_MAX_INPUT_SIZE), [MutationKind::ByteInsert]);
        let m = Mutation::ByteInsert { pos: 0, byte: 0x61 };
        assert_eq!(m.apply(b""), b"a");
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            assert_eq!(mutate(b"", DEFAULT_MAX_INPUT_SIZE, &mut rng).len(), 1);
        }
    }

    #[test]
    fn delete_removes_one_byte() {
        assert_eq!(Mutation::ByteDelete { pos: 1 }.apply(b"abc"), b"ac");
    }

    #[test]
    fn other_operators() {
        assert_eq!(Mutation::BitFlip { pos: 0, bit: 0 }.apply(b"a"), b"`");
        assert_eq!(Mutation::ByteReplace { pos: 2, byte: b'z' }.apply(b"abc"), b"abz");
        assert_eq!(Mutation::Truncate { len: 1 }.apply(b"abc"), b"a");
    }

    #[test]
    fn full_input_cannot_grow() {
        assert!(!legal_kinds(4, 4).contains(&MutationKind::ByteInsert));
        assert_eq!(legal_kinds(9, 4), [MutationKind::Truncate]);
    }

    #[test]
    fn replay_with_reset_generator() {
        let first = mutate(b"abc", DEFAULT_MAX_INPUT_SIZE, &mut rng_from_seed(42));
        for _ in 0..5 {
            assert_eq!(mutate(b"abc", DEFAULT_MAX_INPUT_SIZE, &mut rng_from_seed(42)), first);
        }
    }

    #[test]
    fn all_operators_get_used() {
        let mut rng = rng_from_seed(1);
        let mut lens = [false; 3];
        for _ in 0..500 {
            let out = mutate(b"abcd", DEFAULT_MAX_INPUT_SIZE, &mut rng);
            match out.len() {
                4 => lens[0] = true,
                5 => lens[1] = true,
                _ => lens[2] = true,
            }
        }
        assert_eq!(lens, [true; 3]);
    }

    proptest! {
        #[test]
        fn output_respects_max_size(input in proptest::collection::vec(any::<u8>(), 0..40), max in 1usize..32, seed: u64) {
            let mut rng = rng_from_seed(seed);
            let out = mutate(&input, max, &mut rng);
            prop_assert!(out.len() <= max);
        }
    }
}
