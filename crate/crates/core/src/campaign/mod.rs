//! The fuzzing loop: corpus scheduling, mutation dispatch, novelty-driven
//! admission, interval bookkeeping and archiving.
//!
//! Output layout under [`CampaignConfig::output`]:
//!
//! ```text
//! queue/                     admitted inputs (seeds included)
//! crashes/<key>/input        first input seen for each dedup key
//! crashes/<key>/report.json
//! hangs/                     distinct inputs that timed out
//! archive/interval_<k>/      copies of inputs admitted during interval k
//! stats.csv
//! ```
//!
//! Mock targets run on a virtual clock (a fixed cost per execution, the
//! full timeout per hang) so that interval boundaries, and therefore
//! `stats.csv`, are reproducible. External targets use the wall clock.

mod stats;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

pub use stats::{percent, seconds, CampaignStats, IntervalRow};

use crate::coverage::{GlobalCoverage, MAP_SIZE};
use crate::executor::{run_once, ExecError, ExecOutcome, ExecStatus, TargetSpec};
use crate::grammar::{mutate_ast, parse, render, MutateOptions, VerilogAst, HELLO_WORLD};
use crate::mutator::{mutate_bytes_with, DEFAULT_INTERESTING};
use crate::rng::SplitMix64;
use crate::triage::{dedup_key, key_dir_name, CrashReport, DenyList};

pub const DEFAULT_INTERVAL: Duration = Duration::from_secs(60);
pub const DEFAULT_MAX_SIZE: usize = 4096;
pub const DEFAULT_GRAMMAR_PROBABILITY: f64 = 0.5;
/// Virtual time charged per mock execution.
pub const VIRTUAL_EXEC_COST: Duration = Duration::from_micros(100);

/// Largest havoc stack is `1 << MAX_STACK_POWER`.
const MAX_STACK_POWER: u64 = 6;
const MAX_GRAMMAR_OPS: u64 = 4;
/// One in this many byte-level mutations splices in a second queue entry.
const SPLICE_ODDS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Seed,
    ByteMutation,
    GrammarMutation,
    Splice,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Seed => "seed",
            Origin::ByteMutation => "byte",
            Origin::GrammarMutation => "grammar",
            Origin::Splice => "splice",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: u64,
    pub bytes: Vec<u8>,
    pub parent: Option<u64>,
    pub origin: Origin,
    pub interval: usize,
    pub novel_edges: usize,
}

impl TestCase {
    /// Name used for the entry in `queue/` and `archive/`.
    pub fn file_name(&self) -> String {
        match self.parent {
            Some(p) => format!("id_{:06}_src_{:06}_{}", self.id, p, self.origin),
            None => format!("id_{:06}_{}", self.id, self.origin),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub target: TargetSpec,
    pub output: PathBuf,
    pub rng_seed: u64,
    pub max_execs: Option<u64>,
    pub max_duration: Option<Duration>,
    pub interval: Duration,
    pub workers: usize,
    pub max_size: usize,
    pub grammar_probability: f64,
    pub seeds: Vec<Vec<u8>>,
    /// Admit novel inputs to the queue. Disabling it turns the loop into
    /// blind mutation of the seeds.
    pub feedback: bool,
    /// Remove archived entries from the live queue at each interval
    /// boundary instead of only copying them.
    pub strict_paper_archiving: bool,
    pub deny: DenyList,
    pub dictionary: Vec<u8>,
}

impl CampaignConfig {
    pub fn new(target: TargetSpec, output: impl Into<PathBuf>) -> Self {
        Self {
            target,
            output: output.into(),
            rng_seed: 0,
            max_execs: None,
            max_duration: None,
            interval: DEFAULT_INTERVAL,
            workers: 1,
            max_size: DEFAULT_MAX_SIZE,
            grammar_probability: DEFAULT_GRAMMAR_PROBABILITY,
            seeds: vec![HELLO_WORLD.as_bytes().to_vec()],
            feedback: true,
            strict_paper_archiving: false,
            deny: DenyList::default(),
            dictionary: DEFAULT_INTERESTING.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |msg: &str| Err(CampaignError::Config(msg.to_string()));
        if self.interval < Duration::from_secs(1) {
            return bad("interval must be at least 1 s");
        }
        if !(0.0..=1.0).contains(&self.grammar_probability) {
            return bad("grammar probability must lie in [0, 1]");
        }
        if self.workers == 0 {
            return bad("worker count must be at least 1");
        }
        if self.max_size == 0 {
            return bad("max input size must be at least 1");
        }
        if self.max_execs.is_none() && self.max_duration.is_none() {
            return bad("an execution or duration budget is required");
        }
        if self.seeds.is_empty() || self.seeds.iter().any(|s| s.is_empty()) {
            return bad("at least one seed is required and seeds must not be empty");
        }
        if self.dictionary.is_empty() {
            return bad("the interesting-value dictionary must not be empty");
        }
        self.target.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Target(#[from] ExecError),
    #[error("target launch failed: {0}")]
    Launch(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output directory {} is not empty", .0.display())]
    OutputNotEmpty(PathBuf),
    #[error("queue is empty")]
    EmptyQueue,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Most recent entry with probability 1/2, otherwise uniform.
pub fn select_next<'a>(queue: &'a [TestCase], rng: &mut SplitMix64) -> Result<&'a TestCase, CampaignError> {
    select_index(queue.len(), rng)
        .map(|i| &queue[i])
        .ok_or(CampaignError::EmptyQueue)
}

fn select_index(len: usize, rng: &mut SplitMix64) -> Option<usize> {
    match len {
        0 => None,
        n if rng.coin() => Some(n - 1),
        n => Some(rng.below_usize(n)),
    }
}

struct Entry {
    case: TestCase,
    ast: Option<VerilogAst>,
}

struct Candidate {
    bytes: Vec<u8>,
    parent: Option<u64>,
    origin: Origin,
}

enum Clock {
    Virtual(Duration),
    Wall(Instant),
}

impl Clock {
    fn now(&self) -> Duration {
        match self {
            Clock::Virtual(t) => *t,
            Clock::Wall(start) => start.elapsed(),
        }
    }

    fn charge(&mut self, cost: Duration) {
        if let Clock::Virtual(t) = self {
            *t += cost;
        }
    }
}

#[derive(Default)]
struct Window {
    execs: u64,
    admissions: u64,
    timeouts: u64,
    edges: usize,
    admitted: Vec<usize>,
}

struct Campaign<'a> {
    config: &'a CampaignConfig,
    dirs: Dirs,
    rng: SplitMix64,
    queue: Vec<Entry>,
    next_id: u64,
    global: GlobalCoverage,
    window_seen: Box<[bool]>,
    window: Window,
    interval: usize,
    stats: CampaignStats,
    hangs: HashSet<u64>,
    clock: Clock,
    execs: u64,
}

struct Dirs {
    root: PathBuf,
    queue: PathBuf,
    crashes: PathBuf,
    hangs: PathBuf,
    archive: PathBuf,
}

impl Dirs {
    fn create(root: &Path) -> Result<Self, CampaignError> {
        if root.is_dir() {
            let mut entries = std::fs::read_dir(root).map_err(io_err(root))?;
            if entries.next().is_some() {
                return Err(CampaignError::OutputNotEmpty(root.to_path_buf()));
            }
        }
        let dirs = Dirs {
            root: root.to_path_buf(),
            queue: root.join("queue"),
            crashes: root.join("crashes"),
            hangs: root.join("hangs"),
            archive: root.join("archive"),
        };
        for d in [&dirs.queue, &dirs.crashes, &dirs.hangs, &dirs.archive] {
            std::fs::create_dir_all(d).map_err(io_err(d))?;
        }
        Ok(dirs)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CampaignError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Runs a campaign to completion.
pub fn fuzz(config: &CampaignConfig) -> Result<CampaignStats, CampaignError> {
    fuzz_with_progress(config, |_| {})
}

/// Like [`fuzz`], calling `progress` with each interval row as it closes.
pub fn fuzz_with_progress(
    config: &CampaignConfig,
    mut progress: impl FnMut(&IntervalRow),
) -> Result<CampaignStats, CampaignError> {
    config.validate()?;
    let dirs = Dirs::create(&config.output)?;
    let mut campaign = Campaign {
        config,
        dirs,
        rng: SplitMix64::new(config.rng_seed),
        queue: Vec::new(),
        next_id: 0,
        global: GlobalCoverage::new(),
        window_seen: vec![false; MAP_SIZE].into_boxed_slice(),
        window: Window::default(),
        interval: 0,
        stats: CampaignStats::default(),
        hangs: HashSet::new(),
        clock: if config.target.is_mock() {
            Clock::Virtual(Duration::ZERO)
        } else {
            Clock::Wall(Instant::now())
        },
        execs: 0,
    };
    campaign.run(&mut progress)?;
    Ok(campaign.stats)
}

impl Campaign<'_> {
    fn budget_left(&self) -> u64 {
        if let Some(limit) = self.config.max_duration {
            if self.clock.now() >= limit {
                return 0;
            }
        }
        match self.config.max_execs {
            Some(n) => n.saturating_sub(self.execs),
            None => u64::MAX,
        }
    }

    fn run(&mut self, progress: &mut dyn FnMut(&IntervalRow)) -> Result<(), CampaignError> {
        let seeds: Vec<Vec<u8>> = self
            .config
            .seeds
            .iter()
            .map(|s| s[..s.len().min(self.config.max_size)].to_vec())
            .collect();
        for seed in &seeds {
            self.admit(seed.clone(), None, Origin::Seed, 0)?;
        }
        self.write_stats()?;
        for seed in seeds {
            if self.budget_left() == 0 {
                break;
            }
            let outcome = run_once(&self.config.target, &seed);
            let candidate = Candidate {
                bytes: seed,
                parent: None,
                origin: Origin::Seed,
            };
            self.dispatch(candidate, outcome, progress)?;
        }
        loop {
            let left = self.budget_left();
            if left == 0 {
                break;
            }
            let batch = (self.config.workers as u64).min(left) as usize;
            let candidates: Vec<Candidate> = (0..batch).map(|_| self.next_candidate()).collect();
            let outcomes = self.execute(&candidates);
            for (candidate, outcome) in candidates.into_iter().zip(outcomes) {
                self.dispatch(candidate, outcome, progress)?;
            }
        }
        if self.window.execs > 0 {
            let end = self.clock.now();
            self.close_interval(end, progress)?;
        }
        self.write_stats()
    }

    fn execute(&self, candidates: &[Candidate]) -> Vec<ExecOutcome> {
        let target = &self.config.target;
        if candidates.len() == 1 {
            return vec![run_once(target, &candidates[0].bytes)];
        }
        std::thread::scope(|scope| {
            let handles: Vec<_> = candidates
                .iter()
                .map(|c| scope.spawn(move || run_once(target, &c.bytes)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("executor thread panicked"))
                .collect()
        })
    }

    fn next_candidate(&mut self) -> Candidate {
        let idx = select_index(self.queue.len(), &mut self.rng).expect("queue holds the seeds");
        let parent = &self.queue[idx];
        let parent_id = parent.case.id;
        let max_size = self.config.max_size;
        if let Some(ast) = &parent.ast {
            if self.rng.chance(self.config.grammar_probability) {
                let seed = self.rng.next_u64();
                let ops = self.rng.range_inclusive(1, MAX_GRAMMAR_OPS) as usize;
                let mut bytes = render(&mutate_ast(ast, seed, ops, &MutateOptions::default()));
                bytes.truncate(max_size);
                return Candidate {
                    bytes,
                    parent: Some(parent_id),
                    origin: Origin::GrammarMutation,
                };
            }
        }
        let donor_idx = if self.queue.len() >= 2 && self.rng.below(SPLICE_ODDS) == 0 {
            let d = self.rng.below_usize(self.queue.len() - 1);
            Some(if d >= idx { d + 1 } else { d })
        } else {
            None
        };
        let stack = 1usize << self.rng.below(MAX_STACK_POWER + 1);
        let seed = self.rng.next_u64();
        let donor = donor_idx.map(|d| self.queue[d].case.bytes.as_slice());
        let bytes = mutate_bytes_with(
            &self.queue[idx].case.bytes,
            seed,
            stack,
            max_size,
            donor,
            &self.config.dictionary,
        )
        .expect("queue entries are non-empty and the stack count is in range");
        Candidate {
            bytes,
            parent: Some(parent_id),
            origin: if donor.is_some() {
                Origin::Splice
            } else {
                Origin::ByteMutation
            },
        }
    }

    fn dispatch(
        &mut self,
        candidate: Candidate,
        outcome: ExecOutcome,
        progress: &mut dyn FnMut(&IntervalRow),
    ) -> Result<(), CampaignError> {
        self.execs += 1;
        self.window.execs += 1;
        if self.global.total_edges.is_none() {
            self.global.total_edges = outcome.total_edges;
            self.stats.total_edges = outcome.total_edges;
        }
        let cost = match outcome.status {
            ExecStatus::LaunchFailure(msg) => return Err(CampaignError::Launch(msg)),
            ExecStatus::Timeout => {
                self.window.timeouts += 1;
                self.record_hang(&candidate.bytes)?;
                self.config.target.timeout
            }
            ExecStatus::Crash(signal) => {
                let report = outcome
                    .crash_report
                    .unwrap_or_else(|| CrashReport::bare(signal));
                self.record_crash(&candidate.bytes, &report)?;
                VIRTUAL_EXEC_COST
            }
            ExecStatus::Clean(_) => {
                for (i, _) in outcome.coverage.nonzero() {
                    if !self.window_seen[i] {
                        self.window_seen[i] = true;
                        self.window.edges += 1;
                    }
                }
                let observed = self.global.observe(&outcome.coverage);
                if observed.is_novel() && self.config.feedback && candidate.origin != Origin::Seed {
                    let id = self.admit(candidate.bytes, candidate.parent, candidate.origin, observed.new_edges)?;
                    self.window.admissions += 1;
                    self.window.admitted.push(id);
                }
                VIRTUAL_EXEC_COST
            }
        };
        self.clock.charge(cost);
        self.roll_intervals(progress)
    }

    fn admit(
        &mut self,
        bytes: Vec<u8>,
        parent: Option<u64>,
        origin: Origin,
        novel_edges: usize,
    ) -> Result<usize, CampaignError> {
        let case = TestCase {
            id: self.next_id,
            bytes,
            parent,
            origin,
            interval: self.interval,
            novel_edges,
        };
        self.next_id += 1;
        write(&self.dirs.queue.join(case.file_name()), &case.bytes)?;
        let ast = parse(&case.bytes).ok();
        self.queue.push(Entry { case, ast });
        Ok(self.queue.len() - 1)
    }

    fn record_crash(&mut self, input: &[u8], report: &CrashReport) -> Result<(), CampaignError> {
        let key = dedup_key(report, &self.config.deny);
        if self.stats.crash_keys.contains(&key) {
            return Ok(());
        }
        let dir = self.dirs.crashes.join(key_dir_name(&key));
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write(&dir.join("input"), input)?;
        write(&dir.join("report.json"), report.to_json().as_bytes())?;
        self.stats.crash_keys.insert(key);
        Ok(())
    }

    fn record_hang(&mut self, input: &[u8]) -> Result<(), CampaignError> {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        input.hash(&mut hasher);
        let digest = hasher.finish();
        if self.hangs.insert(digest) {
            write(&self.dirs.hangs.join(format!("hang_{digest:016x}")), input)?;
        }
        Ok(())
    }

    fn roll_intervals(&mut self, progress: &mut dyn FnMut(&IntervalRow)) -> Result<(), CampaignError> {
        let len = self.config.interval;
        loop {
            let boundary = len * (self.interval as u32 + 1);
            if self.clock.now() < boundary {
                return Ok(());
            }
            self.close_interval(boundary, progress)?;
        }
    }

    /// Appends the current interval's row, archives its admissions and
    /// opens the next interval.
    fn close_interval(&mut self, end: Duration, progress: &mut dyn FnMut(&IntervalRow)) -> Result<(), CampaignError> {
        let start = self.config.interval * self.interval as u32;
        let window = std::mem::take(&mut self.window);
        let total = self.global.total_edges;
        let row = IntervalRow {
            interval: self.interval,
            start_s: seconds(start.as_millis()),
            end_s: seconds(end.as_millis()),
            execs: window.execs,
            admissions: window.admissions,
            timeouts: window.timeouts,
            unique_crashes: self.stats.crash_keys.len(),
            edges_hit: self.global.edges_hit(),
            coverage_pct: percent(self.global.edges_hit(), total),
            interval_edges: window.edges,
            interval_coverage_pct: percent(window.edges, total),
        };
        self.archive(&window.admitted)?;
        self.window_seen.fill(false);
        self.stats.rows.push(row);
        progress(self.stats.rows.last().unwrap());
        self.interval += 1;
        self.write_stats()
    }

    fn archive(&mut self, admitted: &[usize]) -> Result<(), CampaignError> {
        let dir = self.dirs.archive.join(format!("interval_{}", self.interval));
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for &idx in admitted {
            let name = self.queue[idx].case.file_name();
            write(&dir.join(&name), &self.queue[idx].case.bytes)?;
        }
        if self.config.strict_paper_archiving {
            for entry in self.queue.iter().filter(|e| e.case.origin != Origin::Seed) {
                let path = self.dirs.queue.join(entry.case.file_name());
                std::fs::remove_file(&path).map_err(io_err(&path))?;
            }
            self.queue.retain(|e| e.case.origin == Origin::Seed);
        }
        Ok(())
    }

    fn write_stats(&self) -> Result<(), CampaignError> {
        let path = self.dirs.root.join(crate::report::STATS_CSV);
        write(&path, crate::report::stats_csv(&self.stats).as_bytes())
    }
}

/// Crash keys found under `crashes/` of a campaign directory.
pub fn stored_crash_dirs(output: &Path) -> std::io::Result<BTreeSet<String>> {
    let dir = output.join("crashes");
    let mut names = BTreeSet::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            names.insert(entry.file_name().to_string_lossy().into_owned());
        }
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::MockTarget;

    fn case(id: u64) -> TestCase {
        TestCase {
            id,
            bytes: vec![b'x'],
            parent: None,
            origin: Origin::Seed,
            interval: 0,
            novel_edges: 0,
        }
    }

    #[test]
    fn select_from_empty_queue_fails() {
        let mut rng = SplitMix64::new(1);
        assert!(matches!(select_next(&[], &mut rng), Err(CampaignError::EmptyQueue)));
    }

    #[test]
    fn single_entry_always_selected() {
        let queue = [case(4)];
        let mut rng = SplitMix64::new(2);
        for _ in 0..100 {
            assert_eq!(select_next(&queue, &mut rng).unwrap().id, 4);
        }
    }

    #[test]
    fn fresh_branch_returns_most_recent() {
        let queue = [case(0), case(1)];
        // Find a seed whose first coin lands on the fresh branch.
        let seed = (0..64)
            .find(|s| SplitMix64::new(*s).coin())
            .unwrap();
        let mut rng = SplitMix64::new(seed);
        assert_eq!(select_next(&queue, &mut rng).unwrap().id, 1);
    }

    #[test]
    fn most_recent_share_is_about_55_percent() {
        let queue: Vec<TestCase> = (0..10).map(case).collect();
        let mut rng = SplitMix64::new(99);
        let hits = (0..10_000)
            .filter(|_| select_next(&queue, &mut rng).unwrap().id == 9)
            .count();
        assert!((5300..=5700).contains(&hits), "{hits}");
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = CampaignConfig::new(TargetSpec::mock(MockTarget::AlwaysExit0), dir.path());
        assert!(matches!(config.validate(), Err(CampaignError::Config(_))));
        config.max_execs = Some(1);
        config.validate().unwrap();
        config.grammar_probability = 1.5;
        assert!(config.validate().is_err());
        config.grammar_probability = 0.5;
        config.interval = Duration::from_millis(500);
        assert!(config.validate().is_err());
        config.interval = DEFAULT_INTERVAL;
        config.seeds = vec![Vec::new()];
        assert!(config.validate().is_err());
    }

    #[test]
    fn file_names_carry_lineage() {
        let mut c = case(12);
        assert_eq!(c.file_name(), "id_000012_seed");
        c.parent = Some(3);
        c.origin = Origin::GrammarMutation;
        assert_eq!(c.file_name(), "id_000012_src_000003_grammar");
    }
}
