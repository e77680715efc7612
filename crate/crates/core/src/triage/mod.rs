//! Crash deduplication, bug classification, two-factor exploitability
//! assessment and crashing-input minimization.

mod exploit;
mod minimize;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exploit::{assess, triage_crash, Assessment, Rationale, TriageVerdict, Triaged, VARIANT_PROBES};
pub use minimize::{minimize, Minimized, REPLACEMENT_BYTE};
pub use report::{Access, CrashReport, Frame, Signal, CRASH_PATH_ENV};

use crate::executor::{run_once, ExecStatus, TargetSpec};

/// Key given to reports with neither frames nor a fault address.
pub const UNKNOWN_KEY: &str = "unknown";

/// Faults below this address are treated as null-page dereferences.
pub const NULL_PAGE_LIMIT: u64 = 4096;

/// Frames from the instrumentation shim, sanitizer runtimes, libc,
/// allocators and language runtimes are never "interesting".
pub const DEFAULT_DENY_PATTERNS: &[&str] = &[
    "hdlfuzz_shim",
    "__hdlfuzz",
    "__sanitizer",
    "__asan",
    "__ubsan",
    "__interceptor",
    "libc.so",
    "libc-2.",
    "__libc_",
    "/glibc",
    "malloc.c",
    "ld-linux",
    "libstdc++",
    "__cxa_",
    "__GI_",
    "core::panicking",
    "std::panicking",
    "rust_begin_unwind",
];

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("input does not reproduce the crash")]
    NotReproducing,
    #[error("target execution failed: {0}")]
    Exec(String),
}

/// Substring patterns matched against each frame's source file and
/// function name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenyList {
    patterns: Vec<String>,
}

impl Default for DenyList {
    fn default() -> Self {
        Self::new(DEFAULT_DENY_PATTERNS.iter().map(|p| p.to_string()))
    }
}

impl DenyList {
    pub fn new(patterns: impl IntoIterator<Item = String>) -> Self {
        Self {
            patterns: patterns.into_iter().filter(|p| !p.is_empty()).collect(),
        }
    }

    pub fn empty() -> Self {
        Self { patterns: Vec::new() }
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn extend(&mut self, extra: impl IntoIterator<Item = String>) {
        self.patterns.extend(extra.into_iter().filter(|p| !p.is_empty()));
    }

    pub fn is_denied(&self, frame: &Frame) -> bool {
        let hit = |s: &Option<String>| {
            s.as_deref()
                .is_some_and(|s| self.patterns.iter().any(|p| s.contains(p.as_str())))
        };
        hit(&frame.file) || hit(&frame.func)
    }

    pub fn first_interesting<'a>(&self, frames: &'a [Frame]) -> Option<&'a Frame> {
        frames.iter().find(|f| !self.is_denied(f))
    }
}

/// Bucket key: the signal name plus the first interesting frame's
/// `file:line` when source information is present, its module-relative
/// address otherwise, or `noframe:<fault address>` when every frame is
/// denied.
pub fn dedup_key(report: &CrashReport, deny: &DenyList) -> String {
    if report.frames.is_empty() && report.fault_addr == 0 {
        return UNKNOWN_KEY.to_string();
    }
    let signal = report.signal.name();
    match deny.first_interesting(&report.frames) {
        Some(Frame {
            file: Some(file),
            line: Some(line),
            ..
        }) => format!("{signal}:{file}:{line}"),
        Some(frame) => format!("{signal}:0x{:x}", frame.addr),
        None => format!("{signal}:noframe:0x{:x}", report.fault_addr),
    }
}

/// Maps a dedup key to a portable directory name.
pub fn key_dir_name(key: &str) -> String {
    key.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | ':') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BugClass {
    HeapOverflow,
    NullDereference,
    Other,
    StackOverflow,
}

impl BugClass {
    pub const ALL: [BugClass; 4] = [
        BugClass::HeapOverflow,
        BugClass::NullDereference,
        BugClass::Other,
        BugClass::StackOverflow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BugClass::HeapOverflow => "heap-overflow",
            BugClass::NullDereference => "null-dereference",
            BugClass::Other => "other",
            BugClass::StackOverflow => "stack-overflow",
        }
    }

    /// Classes that can corrupt memory holding code pointers.
    pub fn is_overflow(self) -> bool {
        matches!(self, BugClass::HeapOverflow | BugClass::StackOverflow)
    }
}

impl fmt::Display for BugClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BugClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BugClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown bug class `{s}`"))
    }
}

/// Category hints recognized verbatim, e.g. from a sanitizer-aware shim.
pub const CATEGORY_HINTS: &[(&str, BugClass)] = &[
    ("heap-buffer-overflow", BugClass::HeapOverflow),
    ("heap-overflow", BugClass::HeapOverflow),
    ("stack-buffer-overflow", BugClass::StackOverflow),
    ("stack-buffer-underflow", BugClass::StackOverflow),
    ("dynamic-stack-buffer-overflow", BugClass::StackOverflow),
    ("stack-overflow", BugClass::StackOverflow),
    ("null-dereference", BugClass::NullDereference),
    ("null-deref", BugClass::NullDereference),
    ("null-pointer-dereference", BugClass::NullDereference),
];

const STACK_PROTECTOR_MARKERS: &[&str] = &["stack smashing detected", "stack-protector"];

pub fn classify(report: &CrashReport) -> BugClass {
    let hint = report.category.as_deref();
    if let Some(class) = hint.and_then(|h| {
        CATEGORY_HINTS
            .iter()
            .find(|(name, _)| *name == h)
            .map(|(_, c)| *c)
    }) {
        return class;
    }
    let is_abort = report.signal == Signal::SIGABRT;
    // An abort carries no meaningful fault address.
    if !is_abort && report.fault_addr < NULL_PAGE_LIMIT {
        return BugClass::NullDereference;
    }
    if is_abort
        && hint.is_some_and(|h| {
            let h = h.to_ascii_lowercase();
            STACK_PROTECTOR_MARKERS.iter().any(|m| h.contains(m))
        })
    {
        return BugClass::StackOverflow;
    }
    if report.fault_in_stack() {
        return BugClass::StackOverflow;
    }
    if report.access == Access::Write && report.fault_addr >= NULL_PAGE_LIMIT {
        return BugClass::HeapOverflow;
    }
    BugClass::Other
}

/// Re-executes candidate inputs during minimization and assessment.
pub trait CrashOracle {
    /// The crash report when `input` crashes the target, `None` otherwise.
    fn probe(&mut self, input: &[u8]) -> Result<Option<CrashReport>, TriageError>;
}

impl<F> CrashOracle for F
where
    F: FnMut(&[u8]) -> Option<CrashReport>,
{
    fn probe(&mut self, input: &[u8]) -> Result<Option<CrashReport>, TriageError> {
        Ok(self(input))
    }
}

/// Oracle backed by real executions of a target.
#[derive(Debug)]
pub struct TargetOracle<'a> {
    target: &'a TargetSpec,
    pub executions: usize,
}

impl<'a> TargetOracle<'a> {
    pub fn new(target: &'a TargetSpec) -> Self {
        Self {
            target,
            executions: 0,
        }
    }
}

impl CrashOracle for TargetOracle<'_> {
    fn probe(&mut self, input: &[u8]) -> Result<Option<CrashReport>, TriageError> {
        self.executions += 1;
        let outcome = run_once(self.target, input);
        match outcome.status {
            ExecStatus::LaunchFailure(msg) => Err(TriageError::Exec(msg)),
            ExecStatus::Crash(signal) => Ok(Some(
                outcome.crash_report.unwrap_or_else(|| CrashReport::bare(signal)),
            )),
            ExecStatus::Clean(_) | ExecStatus::Timeout => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shim() -> Frame {
        Frame::source(0x10, "hdlfuzz_shim.c", 88, "__hdlfuzz_crash_handler")
    }

    fn segv(frames: Vec<Frame>) -> CrashReport {
        CrashReport {
            frames,
            fault_addr: 0x1234_5678,
            access: Access::Read,
            ..CrashReport::bare(Signal::SIGSEGV)
        }
    }

    #[test]
    fn deny_listed_frame_skipped_then_file_line() {
        let report = segv(vec![shim(), Frame::source(0x400, "parser.c", 120, "parse")]);
        assert_eq!(dedup_key(&report, &DenyList::default()), "SIGSEGV:parser.c:120");
    }

    #[test]
    fn different_callers_same_key() {
        let a = segv(vec![shim(), Frame::source(0x400, "parser.c", 120, "parse"), Frame::source(0x900, "main.c", 5, "main")]);
        let b = segv(vec![Frame::source(0x400, "parser.c", 120, "parse"), Frame::source(0x700, "cli.c", 77, "run")]);
        let deny = DenyList::default();
        assert_eq!(dedup_key(&a, &deny), dedup_key(&b, &deny));
    }

    #[test]
    fn address_fallbacks() {
        let deny = DenyList::default();
        let no_source = segv(vec![shim(), Frame::addr(0xbeef)]);
        assert_eq!(dedup_key(&no_source, &deny), "SIGSEGV:0xbeef");
        let all_denied = segv(vec![shim()]);
        assert_eq!(dedup_key(&all_denied, &deny), "SIGSEGV:noframe:0x12345678");
        let nothing = CrashReport::bare(Signal::SIGSEGV);
        assert_eq!(dedup_key(&nothing, &deny), UNKNOWN_KEY);
        let fault_only = CrashReport {
            fault_addr: 0x40,
            ..CrashReport::bare(Signal::SIGBUS)
        };
        assert_eq!(dedup_key(&fault_only, &deny), "SIGBUS:noframe:0x40");
    }

    #[test]
    fn key_dir_names_are_flat() {
        assert_eq!(key_dir_name("SIGSEGV:src/parser.c:120"), "SIGSEGV:src_parser.c:120");
    }

    #[test]
    fn classification_rules() {
        let null = CrashReport {
            fault_addr: 0,
            ..segv(vec![])
        };
        assert_eq!(classify(&null), BugClass::NullDereference);

        let hinted = CrashReport {
            category: Some("heap-buffer-overflow".into()),
            fault_addr: 0,
            ..segv(vec![])
        };
        assert_eq!(classify(&hinted), BugClass::HeapOverflow);

        let controlled_write = CrashReport {
            fault_addr: 0x4141_4141,
            access: Access::Write,
            ..segv(vec![])
        };
        assert_eq!(classify(&controlled_write), BugClass::HeapOverflow);

        let in_stack = CrashReport {
            fault_addr: 0x7ffe_0010,
            stack_lo: Some(0x7ffe_0000),
            stack_hi: Some(0x7fff_0000),
            ..segv(vec![])
        };
        assert_eq!(classify(&in_stack), BugClass::StackOverflow);

        let smashed = CrashReport {
            category: Some("*** stack smashing detected ***".into()),
            ..CrashReport::bare(Signal::SIGABRT)
        };
        assert_eq!(classify(&smashed), BugClass::StackOverflow);

        let plain_abort = CrashReport::bare(Signal::SIGABRT);
        assert_eq!(classify(&plain_abort), BugClass::Other);

        let wild_read = segv(vec![]);
        assert_eq!(classify(&wild_read), BugClass::Other);

        let unknown_hint = CrashReport {
            category: Some("heap-use-after-free".into()),
            fault_addr: 8,
            ..segv(vec![])
        };
        assert_eq!(classify(&unknown_hint), BugClass::NullDereference);
    }

    #[test]
    fn bug_class_names_round_trip() {
        for class in BugClass::ALL {
            assert_eq!(class.as_str().parse::<BugClass>().unwrap(), class);
            assert_eq!(serde_json::to_string(&class).unwrap(), format!("\"{class}\""));
        }
    }
}
