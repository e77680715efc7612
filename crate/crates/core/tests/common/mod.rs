//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use hdlfuzz::campaign::{CampaignStats, IntervalRow};
use hdlfuzz::triage::{BugClass, TriageVerdict};

pub const SIX_HOURS: f64 = 6.0 * 3600.0;

/// Timeouts per six-hour interval over a day of fuzzing z3.
pub const Z3_TIMEOUTS: [u64; 5] = [5_000, 7_000, 22_000, 26_000, 23_000];
const Z3_EDGES: [usize; 5] = [1_210, 1_530, 1_644, 1_690, 1_702];

pub fn z3_stats() -> CampaignStats {
    let rows = Z3_TIMEOUTS
        .iter()
        .zip(Z3_EDGES)
        .enumerate()
        .map(|(i, (&timeouts, edges))| IntervalRow {
            execs: 400_000,
            timeouts,
            edges_hit: edges,
            ..IntervalRow::zero(i, i as f64 * SIX_HOURS, (i + 1) as f64 * SIX_HOURS)
        })
        .collect();
    CampaignStats {
        rows,
        ..Default::default()
    }
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares `actual` with a frozen golden file. With `HDLFUZZ_BLESS=1` a
/// missing golden file is written instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden(name);
    match std::fs::read_to_string(&path) {
        Ok(expected) if expected == actual => Ok(()),
        Ok(_) => Err(format!("{} differs from generated output", path.display())),
        Err(_) if std::env::var_os("HDLFUZZ_BLESS").is_some() => {
            std::fs::write(&path, actual).map_err(|e| e.to_string())
        }
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

pub fn verdict(target: &str, key: &str, class: BugClass) -> TriageVerdict {
    TriageVerdict {
        target: target.into(),
        dedup_key: key.into(),
        class,
        vulnerable: class.is_overflow(),
        flaky: false,
        rationale: None,
        minimized_len: None,
    }
}

/// Unique bugs per tool and class, vulnerable overflows included:
/// 37 bugs, 12 of them exploitable.
pub const TOOL_BUGS: &[(&str, &[(BugClass, usize)])] = &[
    ("ABC", &[(BugClass::NullDereference, 9)]),
    ("GTKWave", &[(BugClass::HeapOverflow, 3), (BugClass::NullDereference, 4)]),
    ("Yosys", &[(BugClass::HeapOverflow, 1), (BugClass::StackOverflow, 2), (BugClass::NullDereference, 3)]),
    ("Z3", &[(BugClass::NullDereference, 1)]),
    ("iverilog", &[(BugClass::StackOverflow, 5), (BugClass::NullDereference, 6)]),
    ("verilator", &[(BugClass::StackOverflow, 1), (BugClass::NullDereference, 2)]),
];

pub fn tool_verdicts() -> Vec<TriageVerdict> {
    let mut out = Vec::new();
    for (tool, classes) in TOOL_BUGS {
        for (class, n) in classes.iter() {
            for i in 0..*n {
                out.push(verdict(tool, &format!("SIGSEGV:{tool}_{class}.c:{}", 100 + i), *class));
            }
        }
    }
    out
}
