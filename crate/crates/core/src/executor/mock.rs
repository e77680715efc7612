//! Built-in behavioral targets that run in-process.
//!
//! Each mock is a pure function of its input: it produces a synthetic
//! coverage map, an exit status and, when it crashes, a synthetic crash
//! report whose innermost frame is the instrumentation shim (so triage has
//! to skip it) followed by a fixed bug site.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::coverage::{CoverageMap, MAP_SIZE};
use crate::rng::mix64;
use crate::triage::{Access, CrashReport, Frame, Signal};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MockTarget {
    AlwaysExit0,
    SleepForever,
    CrashOnSubstring(Vec<u8>),
    CrashOnLength(usize),
    CrashOnMagic([u8; 4]),
    CrashNullDeref,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MockError {
    #[error("unknown mock target `{0}`")]
    Unknown(String),
    #[error("mock `{name}` needs a parameter: {hint}")]
    MissingParam { name: &'static str, hint: &'static str },
    #[error("invalid parameter for mock `{name}`: {message}")]
    BadParam { name: &'static str, message: String },
}

/// What a mock does with one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockBehavior {
    Exit(i32),
    Hang,
    Crash(CrashReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockRun {
    pub behavior: MockBehavior,
    pub coverage: CoverageMap,
    pub total_edges: u64,
}

pub const SHIM_FILE: &str = "hdlfuzz_shim.c";
pub const SHIM_FUNC: &str = "__hdlfuzz_crash_handler";

/// Base of the synthetic heap region used in fault addresses.
const HEAP_BASE: u64 = 0x6000_0000;

impl MockTarget {
    /// Names and parameter hints for `targets` listings.
    pub const CATALOG: [(&'static str, &'static str); 6] = [
        ("always-exit-0", "exits 0 on every input"),
        ("sleep-forever", "never finishes; always times out"),
        ("crash-on-substring:S", "SIGSEGV read when the input contains S"),
        ("crash-on-length:N", "SIGSEGV heap write when the input is longer than N bytes"),
        ("crash-on-magic:M", "SIGSEGV write when the 4-byte magic M appears; one edge per matched prefix byte"),
        ("crash-null-deref", "SIGSEGV read of address 0 on every input"),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MockTarget::AlwaysExit0 => "always-exit-0",
            MockTarget::SleepForever => "sleep-forever",
            MockTarget::CrashOnSubstring(_) => "crash-on-substring",
            MockTarget::CrashOnLength(_) => "crash-on-length",
            MockTarget::CrashOnMagic(_) => "crash-on-magic",
            MockTarget::CrashNullDeref => "crash-null-deref",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            MockTarget::AlwaysExit0 => 1,
            MockTarget::SleepForever => 2,
            MockTarget::CrashOnSubstring(_) => 3,
            MockTarget::CrashOnLength(_) => 4,
            MockTarget::CrashOnMagic(_) => 5,
            MockTarget::CrashNullDeref => 6,
        }
    }

    /// Map index of this mock's `n`-th synthetic edge.
    pub fn edge(&self, n: u64) -> usize {
        (mix64((self.tag() << 32) | n) as usize) % MAP_SIZE
    }

    pub fn total_edges(&self) -> u64 {
        match self {
            MockTarget::CrashOnSubstring(s) => 1 + s.len() as u64,
            MockTarget::CrashOnLength(_) => 1 + 65,
            MockTarget::CrashOnMagic(m) => 1 + m.len() as u64,
            _ => 1,
        }
    }

    pub fn run(&self, input: &[u8]) -> MockRun {
        let mut coverage = CoverageMap::new();
        coverage.hit(self.edge(0));
        let behavior = match self {
            MockTarget::AlwaysExit0 => MockBehavior::Exit(0),
            MockTarget::SleepForever => MockBehavior::Hang,
            MockTarget::CrashOnSubstring(needle) => {
                let matched = longest_prefix_match(input, needle);
                self.prefix_edges(&mut coverage, matched);
                if matched == needle.len() {
                    MockBehavior::Crash(report(
                        Access::Read,
                        0x5000_0000,
                        Frame::source(0x1a40, "mock_substring.c", 42, "scan_token"),
                    ))
                } else {
                    MockBehavior::Exit(0)
                }
            }
            MockTarget::CrashOnLength(limit) => {
                let class = usize::BITS - input.len().leading_zeros();
                coverage.hit(self.edge(1 + u64::from(class)));
                if input.len() > *limit {
                    let sum = input.iter().fold(0u64, |acc, &b| acc.wrapping_add(u64::from(b)));
                    let fault = HEAP_BASE
                        .wrapping_add(input.len() as u64)
                        .wrapping_add(sum);
                    MockBehavior::Crash(report(
                        Access::Write,
                        fault,
                        Frame::source(0x2b10, "mock_length.c", 17, "copy_record"),
                    ))
                } else {
                    MockBehavior::Exit(0)
                }
            }
            MockTarget::CrashOnMagic(magic) => {
                let matched = longest_prefix_match(input, magic);
                self.prefix_edges(&mut coverage, matched);
                if matched == magic.len() {
                    MockBehavior::Crash(report(
                        Access::Write,
                        u64::from(u32::from_be_bytes(*magic)),
                        Frame::source(0x3c20, "mock_magic.c", 31, "check_magic"),
                    ))
                } else {
                    MockBehavior::Exit(0)
                }
            }
            MockTarget::CrashNullDeref => MockBehavior::Crash(report(
                Access::Read,
                0,
                Frame::source(0x4d30, "mock_null.c", 9, "deref_node"),
            )),
        };
        MockRun {
            behavior,
            coverage,
            total_edges: self.total_edges(),
        }
    }

    fn prefix_edges(&self, coverage: &mut CoverageMap, matched: usize) {
        for k in 1..=matched {
            coverage.hit(self.edge(k as u64));
        }
    }
}

fn report(access: Access, fault_addr: u64, site: Frame) -> CrashReport {
    CrashReport {
        signal: Signal::SIGSEGV,
        fault_addr,
        access,
        frames: vec![
            Frame::source(0x10, SHIM_FILE, 88, SHIM_FUNC),
            site,
            Frame::source(0x1000, "main.c", 12, "main"),
        ],
        category: None,
        stack_lo: None,
        stack_hi: None,
    }
}

/// Length of the longest prefix of `needle` occurring anywhere in `haystack`.
pub fn longest_prefix_match(haystack: &[u8], needle: &[u8]) -> usize {
    let mut best = 0;
    for start in 0..haystack.len() {
        let matched = haystack[start..]
            .iter()
            .zip(needle)
            .take_while(|(a, b)| a == b)
            .count();
        best = best.max(matched);
        if best == needle.len() {
            break;
        }
    }
    best
}

impl FromStr for MockTarget {
    type Err = MockError;

    /// Parses `<name>[:param]`, with or without a leading `mock:`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix("mock:").unwrap_or(s);
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        match name {
            "always-exit-0" => Ok(MockTarget::AlwaysExit0),
            "sleep-forever" => Ok(MockTarget::SleepForever),
            "crash-null-deref" => Ok(MockTarget::CrashNullDeref),
            "crash-on-substring" => {
                let p = param.filter(|p| !p.is_empty()).ok_or(MockError::MissingParam {
                    name: "crash-on-substring",
                    hint: "a non-empty substring",
                })?;
                Ok(MockTarget::CrashOnSubstring(p.as_bytes().to_vec()))
            }
            "crash-on-length" => {
                let p = param.ok_or(MockError::MissingParam {
                    name: "crash-on-length",
                    hint: "a byte count",
                })?;
                p.parse().map(MockTarget::CrashOnLength).map_err(|e| MockError::BadParam {
                    name: "crash-on-length",
                    message: format!("`{p}`: {e}"),
                })
            }
            "crash-on-magic" => {
                let p = param.ok_or(MockError::MissingParam {
                    name: "crash-on-magic",
                    hint: "exactly 4 bytes",
                })?;
                let magic: [u8; 4] = p.as_bytes().try_into().map_err(|_| MockError::BadParam {
                    name: "crash-on-magic",
                    message: format!("`{p}` is not exactly 4 bytes"),
                })?;
                Ok(MockTarget::CrashOnMagic(magic))
            }
            other => Err(MockError::Unknown(other.to_string())),
        }
    }
}

impl fmt::Display for MockTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mock:{}", self.name())?;
        match self {
            MockTarget::CrashOnSubstring(s) => write!(f, ":{}", String::from_utf8_lossy(s)),
            MockTarget::CrashOnLength(n) => write!(f, ":{n}"),
            MockTarget::CrashOnMagic(m) => write!(f, ":{}", String::from_utf8_lossy(m)),
            _ => Ok(()),
        }
    }
}
