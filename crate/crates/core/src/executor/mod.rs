//! One supervised target execution per test case.

mod mock;

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;
use wait_timeout::ChildExt;

pub use mock::{longest_prefix_match, MockBehavior, MockError, MockRun, MockTarget, SHIM_FILE, SHIM_FUNC};

use crate::coverage::{read_meta, CoverageMap, COV_PATH_ENV, MAP_SIZE};
use crate::triage::{CrashReport, Signal, CRASH_PATH_ENV};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(1000);
/// Argument-template token replaced by the input file path.
pub const INPUT_TOKEN: &str = "@@";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetKind {
    External { program: PathBuf, args: Vec<String> },
    Mock(MockTarget),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputMode {
    #[default]
    FileArgument,
    Stdin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub input_mode: InputMode,
    pub timeout: Duration,
    pub env: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Mock(#[from] MockError),
    #[error("target program {} does not exist", .0.display())]
    Missing(PathBuf),
    #[error("target program {} is not executable", .0.display())]
    NotExecutable(PathBuf),
    #[error("timeout must be at least 1 ms")]
    Timeout,
    #[error("target launch failed: {0}")]
    Launch(String),
}

impl TargetSpec {
    pub fn mock(mock: MockTarget) -> Self {
        Self {
            kind: TargetKind::Mock(mock),
            input_mode: InputMode::FileArgument,
            timeout: DEFAULT_TIMEOUT,
            env: Vec::new(),
        }
    }

    pub fn external(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            kind: TargetKind::External {
                program: program.into(),
                args,
            },
            input_mode: InputMode::FileArgument,
            timeout: DEFAULT_TIMEOUT,
            env: Vec::new(),
        }
    }

    /// `mock:<name>[:param]` names a built-in target; anything else is a
    /// program path run with `args`.
    pub fn from_uri(uri: &str, args: Vec<String>) -> Result<Self, ExecError> {
        if uri.starts_with("mock:") {
            Ok(Self::mock(MockTarget::from_str(uri)?))
        } else {
            Ok(Self::external(uri, args))
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn is_mock(&self) -> bool {
        matches!(self.kind, TargetKind::Mock(_))
    }

    pub fn display_name(&self) -> String {
        match &self.kind {
            TargetKind::Mock(m) => m.to_string(),
            TargetKind::External { program, .. } => program
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| program.display().to_string()),
        }
    }

    pub fn validate(&self) -> Result<(), ExecError> {
        if self.timeout < Duration::from_millis(1) {
            return Err(ExecError::Timeout);
        }
        if let TargetKind::External { program, .. } = &self.kind {
            let meta = std::fs::metadata(program).map_err(|_| ExecError::Missing(program.clone()))?;
            if !meta.is_file() || !is_executable(&meta) {
                return Err(ExecError::NotExecutable(program.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(unix)]
fn is_executable(meta: &std::fs::Metadata) -> bool {
    use std::os::unix::fs::PermissionsExt;
    meta.permissions().mode() & 0o111 != 0
}

#[cfg(not(unix))]
fn is_executable(_meta: &std::fs::Metadata) -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecStatus {
    Clean(i32),
    Crash(Signal),
    Timeout,
    LaunchFailure(String),
}

#[derive(Debug, Clone)]
pub struct ExecOutcome {
    pub status: ExecStatus,
    pub duration: Duration,
    pub coverage: CoverageMap,
    /// Present only for `Crash` outcomes.
    pub crash_report: Option<CrashReport>,
    /// Instrumented block count reported by the target, if any.
    pub total_edges: Option<u64>,
}

impl ExecOutcome {
    pub fn is_crash(&self) -> bool {
        matches!(self.status, ExecStatus::Crash(_))
    }

    fn launch_failure(message: String, started: Instant) -> Self {
        Self {
            status: ExecStatus::LaunchFailure(message),
            duration: started.elapsed(),
            coverage: CoverageMap::new(),
            crash_report: None,
            total_edges: None,
        }
    }
}

/// Runs `input` through `target` once.
///
/// External targets get a private temporary directory holding the input
/// file, the coverage map and the crash report path, so concurrent calls
/// never share protocol files.
pub fn run_once(target: &TargetSpec, input: &[u8]) -> ExecOutcome {
    match &target.kind {
        TargetKind::Mock(mock) => run_mock(mock, target.timeout, input),
        TargetKind::External { program, args } => run_external(target, program, args, input),
    }
}

fn run_mock(mock: &MockTarget, timeout: Duration, input: &[u8]) -> ExecOutcome {
    let started = Instant::now();
    let run = mock.run(input);
    let (status, crash_report) = match run.behavior {
        MockBehavior::Exit(code) => (ExecStatus::Clean(code), None),
        MockBehavior::Hang => {
            std::thread::sleep(timeout);
            (ExecStatus::Timeout, None)
        }
        MockBehavior::Crash(report) => (ExecStatus::Crash(report.signal), Some(report)),
    };
    ExecOutcome {
        status,
        duration: started.elapsed(),
        coverage: run.coverage,
        crash_report,
        total_edges: Some(run.total_edges),
    }
}

fn substitute_args(args: &[String], input_path: &Path, mode: InputMode) -> Vec<String> {
    let path = input_path.to_string_lossy();
    let mut out: Vec<String> = args.iter().map(|a| a.replace(INPUT_TOKEN, &path)).collect();
    if mode == InputMode::FileArgument && !args.iter().any(|a| a.contains(INPUT_TOKEN)) {
        out.push(path.into_owned());
    }
    out
}

fn run_external(target: &TargetSpec, program: &Path, args: &[String], input: &[u8]) -> ExecOutcome {
    let started = Instant::now();
    let dir = match tempfile::Builder::new().prefix("hdlfuzz-exec-").tempdir() {
        Ok(d) => d,
        Err(e) => return ExecOutcome::launch_failure(format!("scratch directory: {e}"), started),
    };
    let input_path = dir.path().join("input");
    let cov_path = dir.path().join("coverage.map");
    let crash_path = dir.path().join("crash.json");
    if let Err(e) = std::fs::write(&input_path, input).and_then(|_| std::fs::write(&cov_path, vec![0u8; MAP_SIZE])) {
        return ExecOutcome::launch_failure(format!("protocol files: {e}"), started);
    }

    let mut cmd = Command::new(program);
    cmd.args(substitute_args(args, &input_path, target.input_mode))
        .env(COV_PATH_ENV, &cov_path)
        .env(CRASH_PATH_ENV, &crash_path)
        .envs(target.env.iter().map(|(k, v)| (k, v)))
        .stdout(Stdio::null())
        .stderr(Stdio::null());
    match target.input_mode {
        InputMode::Stdin => match File::open(&input_path) {
            Ok(f) => {
                cmd.stdin(f);
            }
            Err(e) => return ExecOutcome::launch_failure(format!("stdin: {e}"), started),
        },
        InputMode::FileArgument => {
            cmd.stdin(Stdio::null());
        }
    }

    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return ExecOutcome::launch_failure(format!("{}: {e}", program.display()), started),
    };
    let waited = child.wait_timeout(target.timeout);
    let exit = match waited {
        Ok(Some(status)) => Some(status),
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
        Err(e) => {
            let _ = child.kill();
            let _ = child.wait();
            return ExecOutcome::launch_failure(format!("wait: {e}"), started);
        }
    };
    let duration = started.elapsed();
    let coverage = CoverageMap::read_file(&cov_path).unwrap_or_default();
    let total_edges = read_meta(&cov_path);

    let Some(exit) = exit else {
        return ExecOutcome {
            status: ExecStatus::Timeout,
            duration,
            coverage,
            crash_report: None,
            total_edges,
        };
    };
    let report = CrashReport::read_file(&crash_path).ok().flatten();
    let status = classify_exit(exit, report.as_ref());
    let crash_report = match status {
        ExecStatus::Crash(signal) => Some(report.unwrap_or_else(|| CrashReport::bare(signal))),
        _ => None,
    };
    ExecOutcome {
        status,
        duration,
        coverage,
        crash_report,
        total_edges,
    }
}

fn classify_exit(exit: std::process::ExitStatus, report: Option<&CrashReport>) -> ExecStatus {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(sig) = exit.signal() {
            let signal = Signal(sig);
            return if signal.is_crash() {
                ExecStatus::Crash(signal)
            } else {
                ExecStatus::Clean(128 + sig)
            };
        }
    }
    // Sanitizer builds report and then exit normally.
    match report {
        Some(r) if r.signal.is_crash() => ExecStatus::Crash(r.signal),
        _ => ExecStatus::Clean(exit.code().unwrap_or(-1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_exit_0_is_clean() {
        let target = TargetSpec::mock(MockTarget::AlwaysExit0);
        let outcome = run_once(&target, b"anything");
        assert_eq!(outcome.status, ExecStatus::Clean(0));
        assert!(outcome.crash_report.is_none());
    }

    #[test]
    fn sleep_forever_times_out() {
        let target = TargetSpec::mock(MockTarget::SleepForever).with_timeout(Duration::from_millis(50));
        let outcome = run_once(&target, b"x");
        assert_eq!(outcome.status, ExecStatus::Timeout);
        assert!(outcome.duration >= Duration::from_millis(50));
        assert!(outcome.crash_report.is_none());
    }

    #[test]
    fn substring_mock_crashes_with_report() {
        let target = TargetSpec::from_uri("mock:crash-on-substring:AAAA", vec![]).unwrap();
        let outcome = run_once(&target, b"xxAAAAyy");
        assert_eq!(outcome.status, ExecStatus::Crash(Signal::SIGSEGV));
        assert!(outcome.crash_report.is_some());
    }

    #[test]
    fn mocks_are_pure() {
        let target = TargetSpec::from_uri("mock:crash-on-length:4", vec![]).unwrap();
        let a = run_once(&target, b"abcdef");
        let b = run_once(&target, b"abcdef");
        assert_eq!(a.status, b.status);
        assert_eq!(a.coverage, b.coverage);
        assert_eq!(a.crash_report, b.crash_report);
    }

    #[test]
    fn argument_template_substitution() {
        let args = vec!["-o".to_string(), "x".to_string(), "--in=@@".to_string()];
        let out = substitute_args(&args, Path::new("/tmp/in"), InputMode::FileArgument);
        assert_eq!(out, ["-o", "x", "--in=/tmp/in"]);
        let out = substitute_args(&["-q".to_string()], Path::new("/tmp/in"), InputMode::FileArgument);
        assert_eq!(out, ["-q", "/tmp/in"]);
        let out = substitute_args(&["-q".to_string()], Path::new("/tmp/in"), InputMode::Stdin);
        assert_eq!(out, ["-q"]);
    }

    #[test]
    fn validation() {
        assert!(TargetSpec::mock(MockTarget::AlwaysExit0)
            .with_timeout(Duration::ZERO)
            .validate()
            .is_err());
        assert!(matches!(
            TargetSpec::external("/nonexistent/tool", vec![]).validate(),
            Err(ExecError::Missing(_))
        ));
    }

    #[test]
    fn launch_failure_is_distinct() {
        let target = TargetSpec::external("/nonexistent/tool", vec![]);
        let outcome = run_once(&target, b"x");
        assert!(matches!(outcome.status, ExecStatus::LaunchFailure(_)));
    }
}
