//! Verification of a built directory of vulnerable test programs.
//!
//! Expected layout: each program at `<dir>/<name>`, `<dir>/bin/<name>` or
//! `<dir>/build/<name>`; optional benign inputs in `<dir>/corpus/<name>/`
//! and crashing inputs in `<dir>/triggers/<name>/`.

use std::path::{Path, PathBuf};

use crate::executor::{run_once, ExecStatus, TargetSpec};

pub const PROGRAMS: [&str; 4] = ["mini_synth", "wave_view", "expr_eval", "deep_parse"];

const SEARCH_DIRS: [&str; 3] = ["", "bin", "build"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Ok,
    Missing,
    NotExecutable(String),
    /// Inputs that did not behave as expected: benign inputs that crashed
    /// or triggers that did not.
    Misbehaved(Vec<PathBuf>),
    LaunchFailure(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramCheck {
    pub name: &'static str,
    pub path: Option<PathBuf>,
    pub benign_run: usize,
    pub triggers_run: usize,
    pub status: CheckStatus,
}

pub fn locate(dir: &Path, name: &str) -> Option<PathBuf> {
    SEARCH_DIRS
        .iter()
        .map(|sub| dir.join(sub).join(name))
        .find(|p| p.is_file())
}

fn inputs(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files
}

pub fn check_program(dir: &Path, name: &'static str) -> ProgramCheck {
    let mut check = ProgramCheck {
        name,
        path: None,
        benign_run: 0,
        triggers_run: 0,
        status: CheckStatus::Missing,
    };
    let Some(path) = locate(dir, name) else {
        return check;
    };
    check.path = Some(path.clone());
    let target = TargetSpec::external(&path, Vec::new());
    if let Err(e) = target.validate() {
        check.status = CheckStatus::NotExecutable(e.to_string());
        return check;
    }
    let mut bad = Vec::new();
    for (sub, expect_crash) in [("corpus", false), ("triggers", true)] {
        for input in inputs(&dir.join(sub).join(name)) {
            let bytes = match std::fs::read(&input) {
                Ok(b) => b,
                Err(_) => {
                    bad.push(input);
                    continue;
                }
            };
            let outcome = run_once(&target, &bytes);
            if let ExecStatus::LaunchFailure(msg) = outcome.status {
                check.status = CheckStatus::LaunchFailure(msg);
                return check;
            }
            if expect_crash {
                check.triggers_run += 1;
            } else {
                check.benign_run += 1;
            }
            if outcome.is_crash() != expect_crash {
                bad.push(input);
            }
        }
    }
    check.status = if bad.is_empty() {
        CheckStatus::Ok
    } else {
        CheckStatus::Misbehaved(bad)
    };
    check
}

pub fn verify(dir: &Path) -> Vec<ProgramCheck> {
    PROGRAMS.iter().map(|name| check_program(dir, name)).collect()
}
