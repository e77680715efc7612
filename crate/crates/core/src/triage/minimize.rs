use super::{dedup_key, CrashOracle, DenyList, TriageError};

/// Byte substituted for "uninteresting" content.
pub const REPLACEMENT_BYTE: u8 = b'a';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minimized {
    pub bytes: Vec<u8>,
    /// Set when a pass result stopped reproducing on re-verification; the
    /// bytes are then the last verified result.
    pub unstable: bool,
    pub executions: usize,
}

struct Checker<'a, O: CrashOracle> {
    oracle: &'a mut O,
    key: &'a str,
    deny: &'a DenyList,
    executions: usize,
}

impl<O: CrashOracle> Checker<'_, O> {
    fn reproduces(&mut self, input: &[u8]) -> Result<bool, TriageError> {
        self.executions += 1;
        Ok(self
            .oracle
            .probe(input)?
            .is_some_and(|r| dedup_key(&r, self.deny) == self.key))
    }
}

/// Shrinks `input` while it keeps crashing with dedup key `key`:
/// block deletion with halving block sizes, then alphabet reduction, then
/// per-byte replacement with [`REPLACEMENT_BYTE`].
pub fn minimize<O: CrashOracle>(
    input: &[u8],
    oracle: &mut O,
    key: &str,
    deny: &DenyList,
) -> Result<Minimized, TriageError> {
    let mut check = Checker {
        oracle,
        key,
        deny,
        executions: 0,
    };
    if !check.reproduces(input)? {
        return Err(TriageError::NotReproducing);
    }
    let passes: [fn(&mut Checker<'_, O>, Vec<u8>) -> Result<Vec<u8>, TriageError>; 3] =
        [delete_blocks, reduce_alphabet, replace_bytes];
    let mut verified = input.to_vec();
    for pass in passes {
        let candidate = pass(&mut check, verified.clone())?;
        if candidate == verified {
            continue;
        }
        if !check.reproduces(&candidate)? {
            return Ok(Minimized {
                bytes: verified,
                unstable: true,
                executions: check.executions,
            });
        }
        verified = candidate;
    }
    Ok(Minimized {
        bytes: verified,
        unstable: false,
        executions: check.executions,
    })
}

fn delete_blocks<O: CrashOracle>(
    check: &mut Checker<'_, O>,
    mut cur: Vec<u8>,
) -> Result<Vec<u8>, TriageError> {
    let mut block = cur.len() / 2;
    while block >= 1 {
        let mut offset = 0;
        while offset < cur.len() {
            let end = (offset + block).min(cur.len());
            if end - offset < cur.len() {
                let mut candidate = Vec::with_capacity(cur.len() - (end - offset));
                candidate.extend_from_slice(&cur[..offset]);
                candidate.extend_from_slice(&cur[end..]);
                if check.reproduces(&candidate)? {
                    cur = candidate;
                    continue;
                }
            }
            offset += block;
        }
        block /= 2;
    }
    Ok(cur)
}

fn reduce_alphabet<O: CrashOracle>(
    check: &mut Checker<'_, O>,
    mut cur: Vec<u8>,
) -> Result<Vec<u8>, TriageError> {
    let mut present = [false; 256];
    for &b in &cur {
        present[usize::from(b)] = true;
    }
    for value in (0..=255u8).filter(|v| present[usize::from(*v)] && *v != REPLACEMENT_BYTE) {
        let candidate: Vec<u8> = cur
            .iter()
            .map(|&b| if b == value { REPLACEMENT_BYTE } else { b })
            .collect();
        if check.reproduces(&candidate)? {
            cur = candidate;
        }
    }
    Ok(cur)
}

fn replace_bytes<O: CrashOracle>(
    check: &mut Checker<'_, O>,
    mut cur: Vec<u8>,
) -> Result<Vec<u8>, TriageError> {
    for i in 0..cur.len() {
        if cur[i] == REPLACEMENT_BYTE {
            continue;
        }
        let original = cur[i];
        cur[i] = REPLACEMENT_BYTE;
        if !check.reproduces(&cur)? {
            cur[i] = original;
        }
    }
    Ok(cur)
}
