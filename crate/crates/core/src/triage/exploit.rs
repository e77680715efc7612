use serde::{Deserialize, Serialize};

use super::{classify, dedup_key, minimize, BugClass, CrashOracle, DenyList, TriageError};

/// Number of single-byte variants probed for fault-address control.
pub const VARIANT_PROBES: usize = 8;

/// Variants that must move the fault address for it to count as
/// input-controlled.
const CONTROL_THRESHOLD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    /// Variants crashing at the same site.
    pub same_site_variants: usize,
    /// Same-site variants whose fault address differs from the original.
    pub moved_fault_variants: usize,
    pub controllable: bool,
    pub code_pointer_reach: bool,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Assessment {
    Flaky,
    Assessed {
        vulnerable: bool,
        rationale: Rationale,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriageVerdict {
    pub target: String,
    pub dedup_key: String,
    pub class: BugClass,
    pub vulnerable: bool,
    /// Did not reproduce on re-execution; excluded from bug tables.
    #[serde(default)]
    pub flaky: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<Rationale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimized_len: Option<usize>,
}

/// Two-factor assessment: the fault address must respond to input bytes,
/// and the corruption must be able to reach a code pointer (an overflow
/// that writes or faults inside the stack). Null dereferences are never
/// vulnerable.
pub fn assess<O: CrashOracle>(
    class: BugClass,
    input: &[u8],
    oracle: &mut O,
    key: &str,
    deny: &DenyList,
) -> Result<Assessment, TriageError> {
    let base = match oracle.probe(input)? {
        Some(r) if dedup_key(&r, deny) == key => r,
        _ => return Ok(Assessment::Flaky),
    };
    let mut same_site = 0;
    let mut moved = 0;
    if !input.is_empty() {
        for i in 0..VARIANT_PROBES {
            let pos = i * input.len() / VARIANT_PROBES;
            let mut variant = input.to_vec();
            variant[pos] ^= 0xFF;
            if let Some(r) = oracle.probe(&variant)? {
                if dedup_key(&r, deny) == key {
                    same_site += 1;
                    if r.fault_addr != base.fault_addr {
                        moved += 1;
                    }
                }
            }
        }
    }
    let controllable = moved >= CONTROL_THRESHOLD;
    let code_pointer_reach = class.is_overflow()
        && (base.access == super::Access::Write || base.fault_in_stack());
    let vulnerable = class != BugClass::NullDereference && controllable && code_pointer_reach;
    let summary = if class == BugClass::NullDereference {
        "null dereference: not exploitable".to_string()
    } else {
        format!(
            "{moved}/{VARIANT_PROBES} variants moved the fault address ({}); {}",
            if controllable { "controllable" } else { "not controllable" },
            if code_pointer_reach {
                "overflow can reach code pointers"
            } else {
                "no code-pointer reach"
            }
        )
    };
    Ok(Assessment::Assessed {
        vulnerable,
        rationale: Rationale {
            same_site_variants: same_site,
            moved_fault_variants: moved,
            controllable,
            code_pointer_reach,
            summary,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triaged {
    pub verdict: TriageVerdict,
    /// Present unless the crash was flaky.
    pub minimized: Option<Vec<u8>>,
}

/// Full pipeline for one crashing input: re-execute, key, classify,
/// minimize and assess.
pub fn triage_crash<O: CrashOracle>(
    target: &str,
    input: &[u8],
    oracle: &mut O,
    deny: &DenyList,
) -> Result<Triaged, TriageError> {
    let flaky = |key: String, class| Triaged {
        verdict: TriageVerdict {
            target: target.to_string(),
            dedup_key: key,
            class,
            vulnerable: false,
            flaky: true,
            rationale: None,
            minimized_len: None,
        },
        minimized: None,
    };
    let Some(report) = oracle.probe(input)? else {
        return Ok(flaky(super::UNKNOWN_KEY.to_string(), BugClass::Other));
    };
    let key = dedup_key(&report, deny);
    let class = classify(&report);
    let minimized = match minimize(input, oracle, &key, deny) {
        Ok(m) => m,
        Err(TriageError::NotReproducing) => return Ok(flaky(key, class)),
        Err(e) => return Err(e),
    };
    if minimized.unstable {
        return Ok(flaky(key, class));
    }
    match assess(class, &minimized.bytes, oracle, &key, deny)? {
        Assessment::Flaky => Ok(flaky(key, class)),
        Assessment::Assessed {
            vulnerable,
            rationale,
        } => Ok(Triaged {
            verdict: TriageVerdict {
                target: target.to_string(),
                dedup_key: key,
                class,
                vulnerable,
                flaky: false,
                rationale: Some(rationale),
                minimized_len: Some(minimized.bytes.len()),
            },
            minimized: Some(minimized.bytes),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triage::{Access, CrashReport, Frame, Signal};

    fn report(fault: u64, access: Access) -> CrashReport {
        CrashReport {
            frames: vec![Frame::source(0x40, "copy.c", 17, "copy")],
            fault_addr: fault,
            access,
            ..CrashReport::bare(Signal::SIGSEGV)
        }
    }

    fn key() -> String {
        dedup_key(&report(0, Access::Read), &DenyList::default())
    }

    #[test]
    fn controlled_write_is_vulnerable() {
        let mut oracle = |input: &[u8]| {
            let sum: u64 = input.iter().map(|&b| u64::from(b)).sum();
            Some(report(0x10_0000 + sum, Access::Write))
        };
        let out = assess(BugClass::HeapOverflow, b"abcdefgh", &mut oracle, &key(), &DenyList::default()).unwrap();
        let Assessment::Assessed { vulnerable, rationale } = out else { panic!() };
        assert!(vulnerable);
        assert_eq!(rationale.moved_fault_variants, 8);
    }

    #[test]
    fn fixed_fault_is_not_controllable() {
        let mut oracle = |_: &[u8]| Some(report(0x10_0000, Access::Write));
        let out = assess(BugClass::HeapOverflow, b"abcdefgh", &mut oracle, &key(), &DenyList::default()).unwrap();
        let Assessment::Assessed { vulnerable, rationale } = out else { panic!() };
        assert!(!vulnerable);
        assert!(!rationale.controllable);
        assert!(rationale.code_pointer_reach);
    }

    #[test]
    fn null_dereference_never_vulnerable() {
        let mut oracle = |input: &[u8]| Some(report(u64::from(input[0]) % 16, Access::Write));
        let out = assess(BugClass::NullDereference, b"abcdefgh", &mut oracle, &key(), &DenyList::default()).unwrap();
        assert!(matches!(out, Assessment::Assessed { vulnerable: false, .. }));
    }

    #[test]
    fn non_reproducing_is_flaky() {
        let mut oracle = |_: &[u8]| None;
        let out = triage_crash("t", b"abc", &mut oracle, &DenyList::default()).unwrap();
        assert!(out.verdict.flaky);
        assert!(out.minimized.is_none());
    }

    #[test]
    fn pipeline_minimizes_and_assesses() {
        let mut oracle = |input: &[u8]| {
            input
                .windows(3)
                .any(|w| w == b"BUG")
                .then(|| report(0, Access::Read))
        };
        let out = triage_crash("t", b"..BUG..", &mut oracle, &DenyList::default()).unwrap();
        assert_eq!(out.minimized.as_deref(), Some(&b"BUG"[..]));
        let verdict = out.verdict;
        assert!(!verdict.flaky);
        assert_eq!(verdict.class, BugClass::NullDereference);
        assert!(!verdict.vulnerable);
        assert_eq!(verdict.minimized_len, Some(3));
    }
}
