use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use hdlfuzz::campaign::{fuzz_with_progress, CampaignConfig, CampaignError};
use hdlfuzz::config::{self, KeyKind};
use hdlfuzz::executor::{InputMode, MockTarget, TargetSpec};
use hdlfuzz::grammar::{generate, mutate_ast, parse, render, GenParams, MutateOptions};
use hdlfuzz::mutator::{interesting_values, mutate_bytes_with};
use hdlfuzz::report;
use hdlfuzz::rng::SplitMix64;
use hdlfuzz::testbed::{self, CheckStatus};
use hdlfuzz::triage::{
    assess, classify, dedup_key, key_dir_name, minimize, triage_crash, Assessment, CrashOracle,
    DenyList, TargetOracle, TriageError, TriageVerdict,
};

const SEED_ENV: &str = "HDLFUZZ_SEED";
const VERDICTS_JSON: &str = "verdicts.json";

#[derive(Parser)]
#[command(name = "hdlfuzz", version, about = "Coverage-guided fuzzing for tools that read Verilog")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fuzzing campaign
    #[command(args_override_self = true)]
    Fuzz(FuzzArgs),
    /// Write grammar-generated seed modules
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Mutate one input file once
    #[command(args_override_self = true)]
    Mutate(MutateArgs),
    /// Deduplicate, classify, minimize and assess a crashes/ directory
    #[command(args_override_self = true)]
    Triage(TriageArgs),
    /// Reduce one crashing input
    #[command(args_override_self = true)]
    Minimize(MinimizeArgs),
    /// Two-factor exploitability test on one crashing input
    #[command(args_override_self = true)]
    Exploitability(ExploitArgs),
    /// Emit stats, plots and the bug table
    #[command(args_override_self = true)]
    Report(ReportArgs),
    /// List mock targets or verify a testbed directory
    #[command(args_override_self = true)]
    Targets(TargetsArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Read `key = value` defaults from FILE; flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TargetArgs {
    /// `mock:<name>[:param]` or the path of a program to run
    #[arg(long, value_name = "URI")]
    target: String,
    /// Whitespace-separated program arguments; `@@` becomes the input path
    #[arg(long, value_name = "ARGS", default_value = "@@", allow_hyphen_values = true)]
    target_args: String,
    /// Feed the input on stdin instead of as a file argument
    #[arg(long)]
    stdin: bool,
    /// Per-execution timeout in milliseconds
    #[arg(long, value_name = "MS", default_value_t = 1000)]
    timeout_ms: u64,
}

impl TargetArgs {
    fn spec(&self) -> Result<TargetSpec, CliError> {
        let args = self.target_args.split_whitespace().map(String::from).collect();
        let mut spec = TargetSpec::from_uri(&self.target, args).map_err(|e| CliError::Usage(e.to_string()))?;
        spec.timeout = Duration::from_millis(self.timeout_ms);
        if self.stdin {
            spec.input_mode = InputMode::Stdin;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct DenyArgs {
    /// Extra frame pattern to skip when keying crashes (repeatable)
    #[arg(long, value_name = "PATTERN", action = ArgAction::Append)]
    deny: Vec<String>,
    /// Start from an empty deny-list instead of the built-in one
    #[arg(long)]
    no_default_deny: bool,
}

impl DenyArgs {
    fn list(&self) -> DenyList {
        let mut list = if self.no_default_deny {
            DenyList::empty()
        } else {
            DenyList::default()
        };
        list.extend(self.deny.iter().cloned());
        list
    }
}

#[derive(Args)]
struct FuzzArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    deny: DenyArgs,
    /// Campaign output directory (must be empty or absent)
    #[arg(long, short, value_name = "DIR", default_value = "hdlfuzz-out")]
    output: PathBuf,
    /// RNG seed (also settable through HDLFUZZ_SEED)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many executions
    #[arg(long, value_name = "N")]
    execs: Option<u64>,
    /// Stop after this many seconds
    #[arg(long, value_name = "SECONDS")]
    duration: Option<u64>,
    /// Interval length in seconds
    #[arg(long, value_name = "SECONDS", default_value_t = 60)]
    interval: u64,
    /// Concurrent executions
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Largest input in bytes
    #[arg(long, value_name = "BYTES", default_value_t = 4096)]
    max_size: usize,
    /// Chance that a parseable input is mutated structurally
    #[arg(long, value_name = "P", default_value_t = 0.5)]
    grammar_p: f64,
    /// Directory of seed inputs (default: a minimal Verilog module)
    #[arg(long, value_name = "DIR")]
    seeds: Option<PathBuf>,
    /// Extra bytes for the interesting-value dictionary (repeatable)
    #[arg(long, value_name = "TOKEN", action = ArgAction::Append)]
    dict_token: Vec<String>,
    /// Never admit new inputs to the queue
    #[arg(long)]
    no_feedback: bool,
    /// Remove archived inputs from the live queue at each interval
    #[arg(long)]
    strict_paper_archiving: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutateMode {
    Byte,
    Grammar,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Number of modules to write
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, short, value_name = "DIR", default_value = "seeds")]
    output: PathBuf,
    #[arg(long, default_value_t = GenParams::default().max_items)]
    max_items: usize,
    #[arg(long, default_value_t = GenParams::default().max_expr_depth)]
    max_expr_depth: usize,
    #[arg(long, default_value_t = GenParams::default().max_identifier_len)]
    max_identifier_len: usize,
    #[arg(long, default_value_t = GenParams::default().width_range.0)]
    min_width: u32,
    #[arg(long, default_value_t = GenParams::default().width_range.1)]
    max_width: u32,
}

#[derive(Args)]
struct MutateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// File to mutate
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Where to write the result (default: stdout)
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MutateMode::Byte)]
    mode: MutateMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stacked byte operators
    #[arg(long, default_value_t = 8)]
    stack: usize,
    /// Structural operators applied in grammar mode
    #[arg(long, default_value_t = 1)]
    ops: usize,
    #[arg(long, value_name = "BYTES", default_value_t = 4096)]
    max_size: usize,
    /// Splice donor file for byte mode
    #[arg(long, value_name = "FILE")]
    donor: Option<PathBuf>,
}

#[derive(Args)]
struct TriageArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    deny: DenyArgs,
    /// A campaign directory or its crashes/ subdirectory
    #[arg(long, value_name = "DIR")]
    crashes: PathBuf,
    /// Where to write verdicts, minimized inputs and the bug table
    #[arg(long, short, value_name = "DIR", default_value = "triage-out")]
    output: PathBuf,
    /// Target name used in the bug table (default: derived from --target)
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
}

#[derive(Args)]
struct MinimizeArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    deny: DenyArgs,
    /// Crashing input
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Result path (default: input path with `.min` appended)
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExploitArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    deny: DenyArgs,
    /// Crashing (ideally minimized) input
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Campaign directory holding stats.json or stats.csv
    #[arg(long, value_name = "DIR")]
    campaign: Option<PathBuf>,
    /// Verdict files written by `triage` (repeatable)
    #[arg(long, value_name = "FILE", action = ArgAction::Append)]
    verdicts: Vec<PathBuf>,
    /// Output directory
    #[arg(long, short, value_name = "DIR", default_value = "report")]
    output: PathBuf,
}

#[derive(Args)]
struct TargetsArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Verify the vulnerable programs built into DIR
    #[arg(long, value_name = "DIR")]
    testbed: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Launch(String),
    NotReproducing(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Failed(_) => 1,
            CliError::Launch(_) => 2,
            CliError::NotReproducing(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Launch(m) | CliError::NotReproducing(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<TriageError> for CliError {
    fn from(e: TriageError) -> Self {
        match e {
            TriageError::NotReproducing => CliError::NotReproducing(e.to_string()),
            TriageError::Exec(m) => CliError::Launch(m),
        }
    }
}

fn failed(context: &str) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Failed(format!("{context}: {e}"))
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let args = match expand_args(raw) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> ExitCode {
    eprintln!("hdlfuzz: {}", e.message());
    ExitCode::from(e.code())
}

/// Splices config-file entries and `HDLFUZZ_SEED` in front of the user's
/// own flags so that, with last-one-wins parsing, flags beat the
/// environment and the environment beats the file.
fn expand_args(raw: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(sub_pos) = raw.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(raw);
    };
    let sub_name = raw[sub_pos].to_string_lossy().into_owned();
    let command = Cli::command();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(raw);
    };
    let mut kinds: BTreeMap<String, KeyKind> = BTreeMap::new();
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "config" | "help") {
            continue;
        }
        let kind = match arg.get_action() {
            ArgAction::SetTrue => KeyKind::Switch,
            ArgAction::Append => KeyKind::Repeatable,
            _ => KeyKind::Value,
        };
        kinds.insert(long.to_string(), kind);
    }
    let user = &raw[sub_pos + 1..];
    let mut injected: Vec<OsString> = Vec::new();
    if let Some(path) = find_flag_value(user, "config") {
        let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
        let entries = config::parse(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
        let tokens = config::to_args(&entries, |k| kinds.get(k).copied())
            .map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
        injected.extend(tokens.into_iter().map(OsString::from));
    }
    if kinds.contains_key("seed") && find_flag_value(user, "seed").is_none() {
        if let Ok(seed) = std::env::var(SEED_ENV) {
            injected.push(format!("--seed={seed}").into());
        }
    }
    let mut out: Vec<OsString> = raw[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend(user.iter().cloned());
    Ok(out)
}

fn find_flag_value(args: &[OsString], name: &str) -> Option<String> {
    let flag = format!("--{name}");
    let prefix = format!("--{name}=");
    let mut iter = args.iter().map(|a| a.to_string_lossy());
    let mut found = None;
    while let Some(a) = iter.next() {
        if a == "--" {
            break;
        }
        if a == flag {
            found = iter.next().map(|v| v.into_owned());
        } else if let Some(v) = a.strip_prefix(&prefix) {
            found = Some(v.to_string());
        }
    }
    found
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Mutate(a) => cmd_mutate(a),
        Command::Triage(a) => cmd_triage(a),
        Command::Minimize(a) => cmd_minimize(a),
        Command::Exploitability(a) => cmd_exploitability(a),
        Command::Report(a) => cmd_report(a),
        Command::Targets(a) => cmd_targets(a),
    }
}

fn read_seeds(dir: &Path) -> Result<Vec<Vec<u8>>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(failed(&dir.display().to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut seeds = Vec::new();
    for p in paths {
        let bytes = fs::read(&p).map_err(failed(&p.display().to_string()))?;
        if !bytes.is_empty() {
            seeds.push(bytes);
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Usage(format!("{}: no non-empty seed files", dir.display())));
    }
    Ok(seeds)
}

fn cmd_fuzz(a: FuzzArgs) -> Result<(), CliError> {
    let mut config = CampaignConfig::new(a.target.spec()?, &a.output);
    config.rng_seed = a.seed;
    config.max_execs = a.execs;
    config.max_duration = a.duration.map(Duration::from_secs);
    config.interval = Duration::from_secs(a.interval);
    config.workers = a.workers;
    config.max_size = a.max_size;
    config.grammar_probability = a.grammar_p;
    config.feedback = !a.no_feedback;
    config.strict_paper_archiving = a.strict_paper_archiving;
    config.deny = a.deny.list();
    let tokens: Vec<u8> = a.dict_token.iter().flat_map(|t| t.bytes()).collect();
    config.dictionary = interesting_values(&tokens);
    if let Some(dir) = &a.seeds {
        config.seeds = read_seeds(dir)?;
    }
    let stats = fuzz_with_progress(&config, |row| {
        eprintln!(
            "interval {:>4}  execs {:>9}  new {:>5}  timeouts {:>6}  crashes {:>4}  edges {:>6}",
            row.interval, row.execs, row.admissions, row.timeouts, row.unique_crashes, row.edges_hit
        );
    })
    .map_err(|e| match e {
        CampaignError::Launch(m) => CliError::Launch(m),
        CampaignError::Target(t) => CliError::Launch(t.to_string()),
        CampaignError::Config(m) => CliError::Usage(m),
        CampaignError::OutputNotEmpty(_) => CliError::Usage(e.to_string()),
        other => CliError::Failed(other.to_string()),
    })?;
    report::emit_stats(&stats, &a.output).map_err(|e| CliError::Failed(e.to_string()))?;
    report::emit_svg_plot(&stats, &a.output).map_err(|e| CliError::Failed(e.to_string()))?;
    println!(
        "{} executions, {} admissions, {} timeouts, {} unique crashes",
        stats.total_execs(),
        stats.total_admissions(),
        stats.total_timeouts(),
        stats.crash_keys.len()
    );
    for key in &stats.crash_keys {
        println!("  {key}");
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let mut rng = SplitMix64::new(a.seed);
    let base = GenParams {
        rng_seed: 0,
        max_items: a.max_items,
        max_expr_depth: a.max_expr_depth,
        max_identifier_len: a.max_identifier_len,
        width_range: (a.min_width, a.max_width),
    };
    base.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&a.output).map_err(failed(&a.output.display().to_string()))?;
    for i in 0..a.count {
        let params = GenParams {
            rng_seed: rng.next_u64(),
            ..base.clone()
        };
        let ast = generate(&params).map_err(|e| CliError::Usage(e.to_string()))?;
        let path = a.output.join(format!("gen_{i:04}.v"));
        fs::write(&path, render(&ast)).map_err(failed(&path.display().to_string()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_mutate(a: MutateArgs) -> Result<(), CliError> {
    let input = fs::read(&a.input).map_err(failed(&a.input.display().to_string()))?;
    let out = match a.mode {
        MutateMode::Byte => {
            let donor = match &a.donor {
                Some(p) => Some(fs::read(p).map_err(failed(&p.display().to_string()))?),
                None => None,
            };
            mutate_bytes_with(
                &input,
                a.seed,
                a.stack,
                a.max_size,
                donor.as_deref(),
                &hdlfuzz::mutator::DEFAULT_INTERESTING,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?
        }
        MutateMode::Grammar => {
            let ast = parse(&input).map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
            let mut bytes = render(&mutate_ast(&ast, a.seed, a.ops, &MutateOptions::default()));
            bytes.truncate(a.max_size);
            bytes
        }
    };
    match &a.output {
        Some(p) => fs::write(p, &out).map_err(failed(&p.display().to_string())),
        None => std::io::stdout().write_all(&out).map_err(failed("stdout")),
    }
}

fn crash_inputs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let root = if dir.join("crashes").is_dir() {
        dir.join("crashes")
    } else {
        dir.to_path_buf()
    };
    let mut inputs: Vec<PathBuf> = fs::read_dir(&root)
        .map_err(failed(&root.display().to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            if p.is_dir() {
                Some(p.join("input")).filter(|i| i.is_file())
            } else {
                p.is_file().then_some(p)
            }
        })
        .collect();
    inputs.sort();
    Ok(inputs)
}

fn target_name(spec: &TargetSpec, name: &Option<String>) -> String {
    name.clone().unwrap_or_else(|| spec.display_name())
}

fn cmd_triage(a: TriageArgs) -> Result<(), CliError> {
    let spec = a.target.spec()?;
    spec.validate().map_err(|e| CliError::Launch(e.to_string()))?;
    let deny = a.deny.list();
    let name = target_name(&spec, &a.name);
    let inputs = crash_inputs(&a.crashes)?;
    let min_dir = a.output.join("minimized");
    fs::create_dir_all(&min_dir).map_err(failed(&min_dir.display().to_string()))?;
    let mut verdicts: Vec<TriageVerdict> = Vec::new();
    for path in &inputs {
        let bytes = fs::read(path).map_err(failed(&path.display().to_string()))?;
        let mut oracle = TargetOracle::new(&spec);
        let triaged = triage_crash(&name, &bytes, &mut oracle, &deny)?;
        let verdict = triaged.verdict;
        if let Some(min) = triaged.minimized {
            let out = min_dir.join(key_dir_name(&verdict.dedup_key));
            fs::write(&out, &min).map_err(failed(&out.display().to_string()))?;
        }
        eprintln!(
            "{}: {} {}{}",
            path.display(),
            verdict.dedup_key,
            verdict.class,
            if verdict.flaky { " (flaky)" } else if verdict.vulnerable { " vulnerable" } else { "" }
        );
        verdicts.push(verdict);
    }
    verdicts.sort_by(|x, y| x.dedup_key.cmp(&y.dedup_key));
    verdicts.dedup_by(|x, y| x.dedup_key == y.dedup_key && x.flaky == y.flaky);
    let json = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize") + "\n";
    let path = a.output.join(VERDICTS_JSON);
    fs::write(&path, json).map_err(failed(&path.display().to_string()))?;
    let table = report::emit_bug_table(&verdicts, &a.output).map_err(|e| CliError::Failed(e.to_string()))?;
    print!("{}", report::bug_table_text(&table));
    Ok(())
}

fn cmd_minimize(a: MinimizeArgs) -> Result<(), CliError> {
    let spec = a.target.spec()?;
    spec.validate().map_err(|e| CliError::Launch(e.to_string()))?;
    let deny = a.deny.list();
    let bytes = fs::read(&a.input).map_err(failed(&a.input.display().to_string()))?;
    let mut oracle = TargetOracle::new(&spec);
    let report = oracle
        .probe(&bytes)?
        .ok_or_else(|| CliError::NotReproducing(format!("{} does not crash the target", a.input.display())))?;
    let key = dedup_key(&report, &deny);
    let result = minimize(&bytes, &mut oracle, &key, &deny)?;
    let out = a.output.clone().unwrap_or_else(|| {
        let mut p = a.input.clone().into_os_string();
        p.push(".min");
        PathBuf::from(p)
    });
    fs::write(&out, &result.bytes).map_err(failed(&out.display().to_string()))?;
    println!(
        "{key}: {} -> {} bytes in {} executions{}",
        bytes.len(),
        result.bytes.len(),
        result.executions,
        if result.unstable { " (unstable; kept last verified result)" } else { "" }
    );
    println!("{}", out.display());
    Ok(())
}

fn cmd_exploitability(a: ExploitArgs) -> Result<(), CliError> {
    let spec = a.target.spec()?;
    spec.validate().map_err(|e| CliError::Launch(e.to_string()))?;
    let deny = a.deny.list();
    let bytes = fs::read(&a.input).map_err(failed(&a.input.display().to_string()))?;
    let mut oracle = TargetOracle::new(&spec);
    let report = oracle
        .probe(&bytes)?
        .ok_or_else(|| CliError::NotReproducing(format!("{} does not crash the target", a.input.display())))?;
    let key = dedup_key(&report, &deny);
    let class = classify(&report);
    match assess(class, &bytes, &mut oracle, &key, &deny)? {
        Assessment::Flaky => Err(CliError::NotReproducing(format!("{key}: crash is flaky"))),
        Assessment::Assessed { vulnerable, rationale } => {
            let verdict = TriageVerdict {
                target: spec.display_name(),
                dedup_key: key,
                class,
                vulnerable,
                flaky: false,
                rationale: Some(rationale),
                minimized_len: Some(bytes.len()),
            };
            println!("{}", serde_json::to_string_pretty(&verdict).expect("verdict serializes"));
            Ok(())
        }
    }
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let stats = match &a.campaign {
        None => Default::default(),
        Some(dir) => {
            let json = dir.join(report::STATS_JSON);
            let csv = dir.join(report::STATS_CSV);
            if json.is_file() {
                let text = fs::read_to_string(&json).map_err(failed(&json.display().to_string()))?;
                report::parse_stats_json(&text).map_err(|e| CliError::Failed(format!("{}: {e}", json.display())))?
            } else {
                let text = fs::read_to_string(&csv).map_err(failed(&csv.display().to_string()))?;
                let rows = report::parse_stats_csv(&text).map_err(|e| CliError::Failed(format!("{}: {e}", csv.display())))?;
                hdlfuzz::campaign::CampaignStats {
                    rows,
                    ..Default::default()
                }
            }
        }
    };
    let mut verdicts: Vec<TriageVerdict> = Vec::new();
    for path in &a.verdicts {
        let text = fs::read_to_string(path).map_err(failed(&path.display().to_string()))?;
        let mut v: Vec<TriageVerdict> =
            serde_json::from_str(&text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        verdicts.append(&mut v);
    }
    let table = report::emit_all(&stats, &verdicts, &a.output).map_err(|e| CliError::Failed(e.to_string()))?;
    print!("{}", report::bug_table_text(&table));
    Ok(())
}

fn cmd_targets(a: TargetsArgs) -> Result<(), CliError> {
    let Some(dir) = a.testbed else {
        for (name, help) in MockTarget::CATALOG {
            println!("mock:{name:<24} {help}");
        }
        return Ok(());
    };
    let mut missing = false;
    let mut misbehaved = false;
    for check in testbed::verify(&dir) {
        let status = match &check.status {
            CheckStatus::Ok => format!("ok ({} benign, {} triggers)", check.benign_run, check.triggers_run),
            CheckStatus::Missing => {
                missing = true;
                "missing".to_string()
            }
            CheckStatus::NotExecutable(m) | CheckStatus::LaunchFailure(m) => {
                missing = true;
                m.clone()
            }
            CheckStatus::Misbehaved(paths) => {
                misbehaved = true;
                let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                format!("unexpected behavior on {}", list.join(", "))
            }
        };
        println!("{:<12} {status}", check.name);
    }
    if missing {
        Err(CliError::Launch(format!("{}: testbed incomplete", dir.display())))
    } else if misbehaved {
        Err(CliError::Failed(format!("{}: testbed programs misbehaved", dir.display())))
    } else {
        Ok(())
    }
}
