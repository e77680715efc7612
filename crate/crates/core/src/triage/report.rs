//! Crash report file format.
//!
//! Targets write a UTF-8 JSON object to the path in `HDLFUZZ_CRASH_PATH`:
//!
//! ```json
//! {"signal": 11, "fault_addr": 4096, "access": "write",
//!  "frames": [{"addr": 4660, "file": "parser.c", "line": 120, "func": "parse_ident"}],
//!  "category": "heap-buffer-overflow", "stack_lo": 140737488289792, "stack_hi": 140737488355328}
//! ```
//!
//! `category`, `stack_lo`, `stack_hi` and the per-frame `file`, `func` and
//! `line` are optional. Frames are innermost first and `addr` is relative to
//! the containing module's load base.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const CRASH_PATH_ENV: &str = "HDLFUZZ_CRASH_PATH";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal(pub i32);

impl Signal {
    pub const SIGILL: Signal = Signal(4);
    pub const SIGABRT: Signal = Signal(6);
    pub const SIGBUS: Signal = Signal(7);
    pub const SIGFPE: Signal = Signal(8);
    pub const SIGSEGV: Signal = Signal(11);

    /// Signals counted as crashes rather than ordinary termination.
    pub const CRASHING: [Signal; 5] = [
        Signal::SIGSEGV,
        Signal::SIGABRT,
        Signal::SIGBUS,
        Signal::SIGILL,
        Signal::SIGFPE,
    ];

    pub fn is_crash(self) -> bool {
        Self::CRASHING.contains(&self)
    }

    pub fn name(self) -> String {
        match self {
            Signal::SIGILL => "SIGILL".into(),
            Signal::SIGABRT => "SIGABRT".into(),
            Signal::SIGBUS => "SIGBUS".into(),
            Signal::SIGFPE => "SIGFPE".into(),
            Signal::SIGSEGV => "SIGSEGV".into(),
            Signal(n) => format!("SIG{n}"),
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Read,
    Write,
    Execute,
    #[default]
    #[serde(other)]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub addr: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub func: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

impl Frame {
    pub fn addr(addr: u64) -> Self {
        Self {
            addr,
            file: None,
            func: None,
            line: None,
        }
    }

    pub fn source(addr: u64, file: &str, line: u32, func: &str) -> Self {
        Self {
            addr,
            file: Some(file.to_string()),
            func: Some(func.to_string()),
            line: Some(line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CrashReport {
    pub signal: Signal,
    #[serde(default)]
    pub fault_addr: u64,
    #[serde(default)]
    pub access: Access,
    #[serde(default)]
    pub frames: Vec<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack_lo: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack_hi: Option<u64>,
}

impl CrashReport {
    /// A report carrying nothing but the terminating signal.
    pub fn bare(signal: Signal) -> Self {
        Self {
            signal,
            fault_addr: 0,
            access: Access::Unknown,
            frames: Vec::new(),
            category: None,
            stack_lo: None,
            stack_hi: None,
        }
    }

    pub fn fault_in_stack(&self) -> bool {
        match (self.stack_lo, self.stack_hi) {
            (Some(lo), Some(hi)) => (lo..hi).contains(&self.fault_addr),
            _ => false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Reads a report file; `Ok(None)` when absent or empty.
    pub fn read_file(path: &Path) -> std::io::Result<Option<Self>> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        if text.trim().is_empty() {
            return Ok(None);
        }
        Self::from_json(&text)
            .map(Some)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_wire_format() {
        let text = r#"{"signal": 11, "fault_addr": 4096, "access": "write",
            "frames": [{"addr": 4660, "file": "parser.c", "line": 120, "func": "parse_ident"},
                       {"addr": 16}],
            "category": "heap-buffer-overflow", "stack_lo": 100, "stack_hi": 200}"#;
        let report = CrashReport::from_json(text).unwrap();
        assert_eq!(report.signal, Signal::SIGSEGV);
        assert_eq!(report.access, Access::Write);
        assert_eq!(report.frames[0], Frame::source(4660, "parser.c", 120, "parse_ident"));
        assert_eq!(report.frames[1], Frame::addr(16));
        assert_eq!(report.category.as_deref(), Some("heap-buffer-overflow"));
        assert_eq!(CrashReport::from_json(&report.to_json()).unwrap(), report);
    }

    #[test]
    fn minimal_report_and_unknown_access() {
        let report = CrashReport::from_json(r#"{"signal": 6, "access": "sideways"}"#).unwrap();
        assert_eq!(report, CrashReport::bare(Signal::SIGABRT));
        let json = CrashReport::bare(Signal::SIGSEGV).to_json();
        assert!(!json.contains("category"));
        assert!(json.contains("\"fault_addr\": 0"));
        assert!(json.contains("\"access\": \"unknown\""));
    }

    #[test]
    fn signal_names() {
        assert_eq!(Signal::SIGSEGV.name(), "SIGSEGV");
        assert_eq!(Signal(15).name(), "SIG15");
        assert!(!Signal(9).is_crash());
    }
}
