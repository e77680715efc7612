//! Havoc-style byte mutation.

use thiserror::Error;

use crate::rng::SplitMix64;

pub const MAX_STACK_COUNT: usize = 256;

/// Bytes with special meaning to text parsers: NUL, all-ones, sign
/// boundaries, newline, quote, backslash and `;`.
pub const DEFAULT_INTERESTING: [u8; 8] = [0x00, 0xFF, 0x7F, 0x80, 0x0A, 0x22, 0x5C, 0x3B];

const MAX_INSERT: usize = 16;
const MAX_DELETE: usize = 32;
const MAX_ARITH: u64 = 35;
const MAX_REDRAWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationOp {
    BitFlip,
    ByteSetInteresting,
    ByteArith,
    InsertRandom,
    DeleteRange,
    DuplicateRange,
    SpliceWith,
}

impl MutationOp {
    pub const WITHOUT_SPLICE: [MutationOp; 6] = [
        MutationOp::BitFlip,
        MutationOp::ByteSetInteresting,
        MutationOp::ByteArith,
        MutationOp::InsertRandom,
        MutationOp::DeleteRange,
        MutationOp::DuplicateRange,
    ];
    pub const ALL: [MutationOp; 7] = [
        MutationOp::BitFlip,
        MutationOp::ByteSetInteresting,
        MutationOp::ByteArith,
        MutationOp::InsertRandom,
        MutationOp::DeleteRange,
        MutationOp::DuplicateRange,
        MutationOp::SpliceWith,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutateError {
    #[error("input must not be empty")]
    EmptyInput,
    #[error("stack count {0} outside [1, {MAX_STACK_COUNT}]")]
    StackCount(usize),
    #[error("max size must be at least 1")]
    MaxSize,
}

/// The fixed dictionary followed by the bytes of any user tokens, in order.
pub fn interesting_values(user_tokens: &[u8]) -> Vec<u8> {
    let mut values = DEFAULT_INTERESTING.to_vec();
    values.extend_from_slice(user_tokens);
    values
}

pub fn mutate_bytes(
    input: &[u8],
    rng_seed: u64,
    stack_count: usize,
    max_size: usize,
    splice_donor: Option<&[u8]>,
) -> Result<Vec<u8>, MutateError> {
    mutate_bytes_with(
        input,
        rng_seed,
        stack_count,
        max_size,
        splice_donor,
        &DEFAULT_INTERESTING,
    )
}

pub fn mutate_bytes_with(
    input: &[u8],
    rng_seed: u64,
    stack_count: usize,
    max_size: usize,
    splice_donor: Option<&[u8]>,
    dictionary: &[u8],
) -> Result<Vec<u8>, MutateError> {
    if input.is_empty() {
        return Err(MutateError::EmptyInput);
    }
    if !(1..=MAX_STACK_COUNT).contains(&stack_count) {
        return Err(MutateError::StackCount(stack_count));
    }
    if max_size == 0 {
        return Err(MutateError::MaxSize);
    }
    let mut rng = SplitMix64::new(rng_seed);
    let mut buf = input[..input.len().min(max_size)].to_vec();
    let donor = splice_donor.filter(|d| !d.is_empty());
    let ops: &[MutationOp] = if donor.is_some() {
        &MutationOp::ALL
    } else {
        &MutationOp::WITHOUT_SPLICE
    };
    for _ in 0..stack_count {
        for _ in 0..MAX_REDRAWS {
            let op = *rng.pick(ops).unwrap();
            if apply_op(&mut buf, op, &mut rng, max_size, donor, dictionary) {
                break;
            }
        }
    }
    Ok(buf)
}

/// Applies a single operator in place. Returns false when it cannot apply
/// (or would be a no-op), leaving `buf` unchanged.
pub fn apply_op(
    buf: &mut Vec<u8>,
    op: MutationOp,
    rng: &mut SplitMix64,
    max_size: usize,
    donor: Option<&[u8]>,
    dictionary: &[u8],
) -> bool {
    if buf.is_empty() {
        return false;
    }
    let len = buf.len();
    match op {
        MutationOp::BitFlip => {
            let pos = rng.below_usize(len);
            buf[pos] ^= 1 << rng.below(8);
            true
        }
        MutationOp::ByteSetInteresting => {
            let pos = rng.below_usize(len);
            let current = buf[pos];
            let choices: Vec<u8> = dictionary.iter().copied().filter(|&b| b != current).collect();
            match rng.pick(&choices) {
                Some(&b) => {
                    buf[pos] = b;
                    true
                }
                None => false,
            }
        }
        MutationOp::ByteArith => {
            let pos = rng.below_usize(len);
            let delta = rng.range_inclusive(1, MAX_ARITH) as u8;
            buf[pos] = if rng.coin() {
                buf[pos].wrapping_add(delta)
            } else {
                buf[pos].wrapping_sub(delta)
            };
            true
        }
        MutationOp::InsertRandom => {
            if len >= max_size {
                return false;
            }
            let count = rng.range_inclusive(1, MAX_INSERT.min(max_size - len) as u64) as usize;
            let pos = rng.below_usize(len + 1);
            let bytes: Vec<u8> = if rng.coin() && !dictionary.is_empty() {
                let b = *rng.pick(dictionary).unwrap();
                vec![b; count]
            } else {
                (0..count).map(|_| rng.next_u64() as u8).collect()
            };
            buf.splice(pos..pos, bytes);
            true
        }
        MutationOp::DeleteRange => {
            if len <= 1 {
                return false;
            }
            let count = rng.range_inclusive(1, (len - 1).min(MAX_DELETE) as u64) as usize;
            let start = rng.below_usize(len - count + 1);
            buf.drain(start..start + count);
            true
        }
        MutationOp::DuplicateRange => {
            if len >= max_size {
                return false;
            }
            let start = rng.below_usize(len);
            let range = rng.range_inclusive(1, (len - start) as u64) as usize;
            let range = range.min(max_size - len);
            let copy = buf[start..start + range].to_vec();
            buf.splice(start + range..start + range, copy);
            true
        }
        MutationOp::SpliceWith => {
            let Some(donor) = donor.filter(|d| !d.is_empty()) else {
                return false;
            };
            let cut = rng.range_inclusive(1, len as u64) as usize;
            let from = rng.below_usize(donor.len());
            let mut out = buf[..cut].to_vec();
            out.extend_from_slice(&donor[from..]);
            out.truncate(max_size);
            if out == *buf {
                return false;
            }
            *buf = out;
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_contents() {
        let values = interesting_values(&[]);
        assert!(values.contains(&0x00));
        assert_eq!(values.len(), 8);
        let with_token = interesting_values(b";");
        assert_eq!(with_token.len(), 9);
        assert_eq!(*with_token.last().unwrap(), 0x3B);
    }

    #[test]
    fn bit_flip_twice_at_same_position_restores() {
        let original = b"hello".to_vec();
        let mut buf = original.clone();
        let mut rng_a = SplitMix64::new(77);
        let mut rng_b = rng_a.clone();
        apply_op(&mut buf, MutationOp::BitFlip, &mut rng_a, 64, None, &DEFAULT_INTERESTING);
        assert_ne!(buf, original);
        apply_op(&mut buf, MutationOp::BitFlip, &mut rng_b, 64, None, &DEFAULT_INTERESTING);
        assert_eq!(buf, original);
    }

    #[test]
    fn duplicate_range_on_ab_can_yield_aab() {
        let mut outcomes = std::collections::BTreeSet::new();
        for seed in 0..200 {
            let mut buf = b"AB".to_vec();
            let mut rng = SplitMix64::new(seed);
            assert!(apply_op(&mut buf, MutationOp::DuplicateRange, &mut rng, 64, None, &[]));
            outcomes.insert(buf);
        }
        assert!(outcomes.contains(b"AAB".as_slice()));
        // Every outcome is "AB" with one contiguous range repeated.
        for out in &outcomes {
            assert!(
                [b"AAB".as_slice(), b"ABAB", b"ABB"].contains(&out.as_slice()),
                "{:?}",
                String::from_utf8_lossy(out)
            );
        }
    }

    #[test]
    fn delete_never_empties() {
        let mut buf = vec![b'x'];
        let mut rng = SplitMix64::new(1);
        assert!(!apply_op(&mut buf, MutationOp::DeleteRange, &mut rng, 64, None, &[]));
        assert_eq!(buf, b"x");
        let mut buf = b"xy".to_vec();
        assert!(apply_op(&mut buf, MutationOp::DeleteRange, &mut rng, 64, None, &[]));
        assert_eq!(buf.len(), 1);
    }

    #[test]
    fn duplicate_caps_at_max_size() {
        let mut buf = vec![b'a'; 10];
        let mut rng = SplitMix64::new(4);
        for _ in 0..100 {
            apply_op(&mut buf, MutationOp::DuplicateRange, &mut rng, 12, None, &[]);
            assert!(buf.len() <= 12);
        }
        assert_eq!(buf.len(), 12);
        assert!(!apply_op(&mut buf, MutationOp::DuplicateRange, &mut rng, 12, None, &[]));
    }

    #[test]
    fn parameter_errors() {
        assert_eq!(mutate_bytes(b"", 0, 1, 10, None), Err(MutateError::EmptyInput));
        assert_eq!(mutate_bytes(b"a", 0, 0, 10, None), Err(MutateError::StackCount(0)));
        assert_eq!(mutate_bytes(b"a", 0, 257, 10, None), Err(MutateError::StackCount(257)));
        assert_eq!(mutate_bytes(b"a", 0, 1, 0, None), Err(MutateError::MaxSize));
    }

    #[test]
    fn splice_only_with_donor() {
        let mut buf = b"abc".to_vec();
        let mut rng = SplitMix64::new(0);
        assert!(!apply_op(&mut buf, MutationOp::SpliceWith, &mut rng, 64, None, &[]));
        let mut spliced = false;
        for seed in 0..50 {
            let mut buf = b"abcdef".to_vec();
            let mut rng = SplitMix64::new(seed);
            if apply_op(&mut buf, MutationOp::SpliceWith, &mut rng, 64, Some(b"XYZ"), &[]) {
                spliced = true;
                assert!(buf.starts_with(b"a"));
            }
        }
        assert!(spliced);
    }
}
