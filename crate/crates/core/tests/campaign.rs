use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Duration;

use hdlfuzz::campaign::{fuzz, stored_crash_dirs, CampaignConfig, CampaignError};
use hdlfuzz::executor::{run_once, MockTarget, TargetSpec};
use hdlfuzz::report::{parse_stats_csv, STATS_CSV};
use hdlfuzz::triage::{dedup_key, DenyList};
use proptest::prelude::*;

fn mock(name: &str) -> TargetSpec {
    TargetSpec::from_uri(name, Vec::new()).unwrap()
}

fn config(target: &str, out: &Path, execs: u64) -> CampaignConfig {
    let mut c = CampaignConfig::new(mock(target), out);
    c.max_execs = Some(execs);
    c.rng_seed = 1;
    c
}

fn files_in(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

#[test]
fn zero_budget_creates_layout_and_keeps_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stats = fuzz(&config("mock:always-exit-0", &out, 0)).unwrap();
    assert!(stats.rows.is_empty());
    for d in ["queue", "crashes", "hangs", "archive"] {
        assert!(out.join(d).is_dir(), "{d}");
    }
    assert_eq!(files_in(&out.join("queue")), BTreeSet::from(["id_000000_seed".to_string()]));
    let csv = fs::read_to_string(out.join(STATS_CSV)).unwrap();
    assert!(parse_stats_csv(&csv).unwrap().is_empty());
}

#[test]
fn refuses_non_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("leftover"), b"x").unwrap();
    let err = fuzz(&config("mock:always-exit-0", dir.path(), 1)).unwrap_err();
    assert!(matches!(err, CampaignError::OutputNotEmpty(_)));
}

#[test]
fn length_crash_found_under_one_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config("mock:crash-on-length:1024", &out, 2_000_000);
    c.seeds = vec![b"a".to_vec()];
    let stats = fuzz(&c).unwrap();
    assert_eq!(stats.crash_keys.len(), 1);
    assert_eq!(stored_crash_dirs(&out).unwrap().len(), 1);
}

#[test]
fn stored_crashes_reproduce_with_same_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config("mock:crash-on-substring:<<", &out, 20_000);
    c.seeds = vec![b"module".to_vec()];
    let stats = fuzz(&c).unwrap();
    assert!(!stats.crash_keys.is_empty());
    for name in stored_crash_dirs(&out).unwrap() {
        let input = fs::read(out.join("crashes").join(&name).join("input")).unwrap();
        let outcome = run_once(&c.target, &input);
        let key = dedup_key(outcome.crash_report.as_ref().unwrap(), &DenyList::default());
        assert!(stats.crash_keys.contains(&key));
    }
}

#[test]
fn timeouts_counted_and_hangs_deduplicated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config("mock:sleep-forever", &out, 12);
    c.target.timeout = Duration::from_millis(5);
    c.interval = Duration::from_secs(1);
    c.seeds = vec![b"z".to_vec()];
    c.grammar_probability = 0.0;
    let stats = fuzz(&c).unwrap();
    assert_eq!(stats.total_timeouts(), 12);
    assert_eq!(stats.total_execs(), 12);
    let hangs = files_in(&out.join("hangs")).len();
    assert!((1..=12).contains(&hangs));
}

#[test]
fn intervals_archive_their_admissions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config("mock:crash-on-magic:HDL!", &out, 200_000);
    c.interval = Duration::from_secs(1);
    let stats = fuzz(&c).unwrap();
    assert!(stats.rows.len() >= 2);
    for row in &stats.rows {
        let archived = out.join("archive").join(format!("interval_{}", row.interval));
        assert_eq!(files_in(&archived).len() as u64, row.admissions);
    }
    let queued = files_in(&out.join("queue")).len() as u64;
    assert_eq!(queued, stats.total_admissions() + 1);
    assert!(stats.rows.windows(2).all(|w| w[0].edges_hit <= w[1].edges_hit));
    let csv = fs::read_to_string(out.join(STATS_CSV)).unwrap();
    let mut expected = stats.rows.clone();
    for r in &mut expected {
        r.interval_edges = 0;
        r.interval_coverage_pct = None;
    }
    assert_eq!(parse_stats_csv(&csv).unwrap(), expected);
}

#[test]
fn strict_archiving_empties_queue_each_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config("mock:crash-on-magic:HDL!", &out, 50_000);
    c.interval = Duration::from_secs(1);
    c.strict_paper_archiving = true;
    let stats = fuzz(&c).unwrap();
    assert!(stats.total_admissions() > 0);
    let archived: usize = stats
        .rows
        .iter()
        .map(|r| files_in(&out.join("archive").join(format!("interval_{}", r.interval))).len())
        .sum();
    assert_eq!(archived as u64, stats.total_admissions());
    assert_eq!(files_in(&out.join("queue")), BTreeSet::from(["id_000000_seed".to_string()]));
}

#[test]
fn parallel_workers_complete_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config("mock:crash-on-magic:HDL!", &out, 5_000);
    c.workers = 4;
    let stats = fuzz(&c).unwrap();
    assert_eq!(stats.total_execs(), 5_000);
}

#[test]
fn missing_external_target_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = CampaignConfig::new(TargetSpec::external("/nonexistent/tool", vec![]), dir.path().join("o"));
    c.max_execs = Some(1);
    assert!(matches!(fuzz(&c), Err(CampaignError::Target(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn cumulative_columns_never_decrease(seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let mut c = config("mock:crash-on-magic:HDL!", &out, 30_000);
        c.rng_seed = seed;
        c.interval = Duration::from_secs(1);
        let stats = fuzz(&c).unwrap();
        prop_assert_eq!(stats.total_execs(), 30_000);
        for w in stats.rows.windows(2) {
            prop_assert!(w[0].edges_hit <= w[1].edges_hit);
            prop_assert!(w[0].unique_crashes <= w[1].unique_crashes);
            prop_assert!(w[0].end_s <= w[1].start_s);
        }
    }
}

#[test]
fn unknown_mock_name_is_an_error() {
    assert!(TargetSpec::from_uri("mock:explode", vec![]).is_err());
    assert!("crash-on-magic:TOOLONG".parse::<MockTarget>().is_err());
}
