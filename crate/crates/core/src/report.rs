//! Campaign artifacts: per-interval statistics, the bug table and SVG
//! charts. Every function here is a pure function of its input.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{CampaignStats, IntervalRow};
use crate::triage::{BugClass, TriageVerdict};

pub const STATS_CSV: &str = "stats.csv";
pub const STATS_JSON: &str = "stats.json";
pub const BUGS_JSON: &str = "bugs.json";
pub const BUGS_TXT: &str = "bugs.txt";
pub const COVERAGE_SVG: &str = "coverage.svg";
pub const TIMEOUTS_SVG: &str = "timeouts.svg";

pub const CSV_HEADER: &str =
    "interval,start_s,end_s,execs,admissions,timeouts,unique_crashes,edges_hit,coverage_pct";

/// Shown wherever a coverage percentage appears.
pub const COVERAGE_NOTE: &str =
    "coverage_pct is edge coverage (edges hit / instrumented blocks), not line coverage";

const VULNERABLE_MARK: &str = "✓";
const SAFE_MARK: &str = "✗";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), ReportError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| ReportError::Io { path, source })
}

pub fn stats_csv(stats: &CampaignStats) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &stats.rows {
        let pct = r.coverage_pct.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.interval, r.start_s, r.end_s, r.execs, r.admissions, r.timeouts, r.unique_crashes, r.edges_hit, pct
        );
    }
    out
}

/// Parses [`stats_csv`] output. Columns that only appear in the JSON form
/// come back as zero / `None`.
pub fn parse_stats_csv(text: &str) -> Result<Vec<IntervalRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => {
            return Err(ReportError::Csv {
                line: 1,
                message: "missing or unexpected header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ReportError::Csv {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} `{s}`"))
        }
        let row = (|| -> Result<IntervalRow, String> {
            Ok(IntervalRow {
                interval: num(fields[0], "interval")?,
                start_s: num(fields[1], "start_s")?,
                end_s: num(fields[2], "end_s")?,
                execs: num(fields[3], "execs")?,
                admissions: num(fields[4], "admissions")?,
                timeouts: num(fields[5], "timeouts")?,
                unique_crashes: num(fields[6], "unique_crashes")?,
                edges_hit: num(fields[7], "edges_hit")?,
                coverage_pct: match fields[8] {
                    "" => None,
                    s => Some(num(s, "coverage_pct")?),
                },
                interval_edges: 0,
                interval_coverage_pct: None,
            })
        })()
        .map_err(err)?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Serialize)]
struct StatsDocument<'a> {
    note: &'static str,
    total_edges: Option<u64>,
    crash_keys: &'a BTreeSet<String>,
    rows: &'a [IntervalRow],
}

/// JSON mirror of the CSV, adding the per-interval edge columns and the
/// crash key set.
pub fn stats_json(stats: &CampaignStats) -> String {
    let doc = StatsDocument {
        note: COVERAGE_NOTE,
        total_edges: stats.total_edges,
        crash_keys: &stats.crash_keys,
        rows: &stats.rows,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("stats serialize");
    s.push('\n');
    s
}

#[derive(Deserialize)]
struct OwnedStatsDocument {
    #[serde(default)]
    total_edges: Option<u64>,
    #[serde(default)]
    crash_keys: BTreeSet<String>,
    rows: Vec<IntervalRow>,
}

pub fn parse_stats_json(text: &str) -> serde_json::Result<CampaignStats> {
    let doc: OwnedStatsDocument = serde_json::from_str(text)?;
    Ok(CampaignStats {
        rows: doc.rows,
        crash_keys: doc.crash_keys,
        total_edges: doc.total_edges,
    })
}

pub fn emit_stats(stats: &CampaignStats, dir: &Path) -> Result<(), ReportError> {
    write(dir, STATS_CSV, &stats_csv(stats))?;
    write(dir, STATS_JSON, &stats_json(stats))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLine {
    pub class: BugClass,
    pub count: usize,
    pub vulnerable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugRow {
    pub target: String,
    pub unique: usize,
    pub vulnerable: usize,
    pub classes: Vec<ClassLine>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugTable {
    pub rows: Vec<BugRow>,
    pub total_unique: usize,
    pub total_vulnerable: usize,
}

/// Groups verdicts by target and class. Flaky verdicts are dropped and a
/// dedup key counts once per target.
pub fn bug_table(verdicts: &[TriageVerdict]) -> BugTable {
    let mut by_target: BTreeMap<&str, BTreeMap<&str, &TriageVerdict>> = BTreeMap::new();
    for v in verdicts.iter().filter(|v| !v.flaky) {
        let keys = by_target.entry(v.target.as_str()).or_default();
        keys.entry(v.dedup_key.as_str())
            .and_modify(|existing| {
                if v.vulnerable && !existing.vulnerable {
                    *existing = v;
                }
            })
            .or_insert(v);
    }
    let mut table = BugTable::default();
    for (target, keys) in by_target {
        let mut classes: BTreeMap<&str, ClassLine> = BTreeMap::new();
        for v in keys.values() {
            let line = classes.entry(v.class.as_str()).or_insert(ClassLine {
                class: v.class,
                count: 0,
                vulnerable: 0,
            });
            line.count += 1;
            line.vulnerable += usize::from(v.vulnerable);
        }
        let classes: Vec<ClassLine> = classes.into_values().collect();
        let row = BugRow {
            target: target.to_string(),
            unique: keys.len(),
            vulnerable: classes.iter().map(|c| c.vulnerable).sum(),
            classes,
        };
        table.total_unique += row.unique;
        table.total_vulnerable += row.vulnerable;
        table.rows.push(row);
    }
    table
}

pub fn bug_table_json(table: &BugTable) -> String {
    let mut s = serde_json::to_string_pretty(table).expect("table serializes");
    s.push('\n');
    s
}

pub fn bug_table_text(table: &BugTable) -> String {
    let width = table
        .rows
        .iter()
        .map(|r| r.target.chars().count())
        .chain(BugClass::ALL.iter().map(|c| c.as_str().len() + 2))
        .chain(["target".len(), "total".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>10}", "target", "unique", "vulnerable");
    for row in &table.rows {
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>10}", row.target, row.unique, row.vulnerable);
        for line in &row.classes {
            let mark = if line.vulnerable > 0 { VULNERABLE_MARK } else { SAFE_MARK };
            let label = format!("  {}", line.class);
            let _ = writeln!(out, "{label:<width$}  {:>6}  {:>10} {mark}", line.count, line.vulnerable);
        }
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>6}  {:>10}",
        "total", table.total_unique, table.total_vulnerable
    );
    out
}

pub fn emit_bug_table(verdicts: &[TriageVerdict], dir: &Path) -> Result<BugTable, ReportError> {
    let table = bug_table(verdicts);
    write(dir, BUGS_JSON, &bug_table_json(&table))?;
    write(dir, BUGS_TXT, &bug_table_text(&table))?;
    Ok(table)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn plot_w() -> f64 {
    SVG_W - LEFT - RIGHT
}

fn plot_h() -> f64 {
    SVG_H - TOP - BOTTOM
}

fn svg_frame(title: &str, y_label: &str, y_max: u64, body: &str, x_ticks: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        SVG_W / 2.0
    );
    let x0 = LEFT;
    let y0 = TOP + plot_h();
    let _ = writeln!(
        s,
        r#"<path d="M {x0} {TOP} L {x0} {y0} L {} {y0}" fill="none" stroke="black"/>"#,
        LEFT + plot_w()
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{y_max}</text>"#,
        x0 - 6.0,
        TOP + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">0</text>"#,
        x0 - 6.0,
        y0 + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        TOP + plot_h() / 2.0,
        TOP + plot_h() / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">interval</text>"#,
        LEFT + plot_w() / 2.0,
        SVG_H - 10.0
    );
    s.push_str(x_ticks);
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn y_of(value: u64, y_max: u64) -> f64 {
    let y0 = TOP + plot_h();
    if y_max == 0 {
        y0
    } else {
        y0 - plot_h() * value as f64 / y_max as f64
    }
}

fn x_ticks(rows: &[IntervalRow], center: impl Fn(usize) -> f64) -> String {
    let mut s = String::new();
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            fmt2(center(i)),
            TOP + plot_h() + 16.0,
            r.interval
        );
    }
    s
}

/// Line chart of cumulative `edges_hit` per interval.
pub fn coverage_svg(stats: &CampaignStats) -> String {
    let rows = &stats.rows;
    let y_max = rows.iter().map(|r| r.edges_hit as u64).max().unwrap_or(0);
    let x_at = |i: usize| {
        if rows.len() <= 1 {
            LEFT + plot_w() / 2.0
        } else {
            LEFT + plot_w() * i as f64 / (rows.len() - 1) as f64
        }
    };
    let mut body = String::new();
    if !rows.is_empty() {
        let points: Vec<String> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{},{}", fmt2(x_at(i)), fmt2(y_of(r.edges_hit as u64, y_max))))
            .collect();
        let _ = writeln!(
            body,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
    }
    svg_frame("Edge coverage", "edges hit", y_max, &body, &x_ticks(rows, x_at))
}

/// Bar chart of timeouts per interval.
pub fn timeouts_svg(stats: &CampaignStats) -> String {
    let rows = &stats.rows;
    let y_max = rows.iter().map(|r| r.timeouts).max().unwrap_or(0);
    let slot = if rows.is_empty() { 0.0 } else { plot_w() / rows.len() as f64 };
    let center = |i: usize| LEFT + slot * (i as f64 + 0.5);
    let mut body = String::new();
    for (i, r) in rows.iter().enumerate() {
        let top = y_of(r.timeouts, y_max);
        let _ = writeln!(
            body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="indianred"><title>{}</title></rect>"#,
            fmt2(LEFT + slot * i as f64 + slot * 0.1),
            fmt2(top),
            fmt2(slot * 0.8),
            fmt2(TOP + plot_h() - top),
            r.timeouts
        );
    }
    svg_frame("Timeouts per interval", "timeouts", y_max, &body, &x_ticks(rows, center))
}

pub fn emit_svg_plot(stats: &CampaignStats, dir: &Path) -> Result<(), ReportError> {
    write(dir, COVERAGE_SVG, &coverage_svg(stats))?;
    write(dir, TIMEOUTS_SVG, &timeouts_svg(stats))
}

/// Writes every artifact into `dir`.
pub fn emit_all(stats: &CampaignStats, verdicts: &[TriageVerdict], dir: &Path) -> Result<BugTable, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    emit_stats(stats, dir)?;
    emit_svg_plot(stats, dir)?;
    emit_bug_table(verdicts, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(interval: usize, edges: usize, timeouts: u64) -> IntervalRow {
        IntervalRow {
            execs: 100,
            timeouts,
            edges_hit: edges,
            coverage_pct: Some(edges as f64 / 10.0),
            ..IntervalRow::zero(interval, interval as f64 * 60.0, (interval + 1) as f64 * 60.0)
        }
    }

    fn verdict(target: &str, key: &str, class: BugClass, vulnerable: bool) -> TriageVerdict {
        TriageVerdict {
            target: target.into(),
            dedup_key: key.into(),
            class,
            vulnerable,
            flaky: false,
            rationale: None,
            minimized_len: None,
        }
    }

    #[test]
    fn empty_campaign_is_header_only() {
        assert_eq!(stats_csv(&CampaignStats::default()), format!("{CSV_HEADER}\n"));
        assert!(parse_stats_csv(&stats_csv(&CampaignStats::default())).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let mut stats = CampaignStats::default();
        stats.rows = vec![row(0, 3, 1), row(1, 5, 0), row(2, 9, 4)];
        stats.rows[1].coverage_pct = None;
        stats.rows[2].start_s = 120.125;
        let csv = stats_csv(&stats);
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(parse_stats_csv(&csv).unwrap(), stats.rows);
        assert!(csv.contains("\n1,60,120,100,0,0,0,5,\n"));
    }

    #[test]
    fn csv_errors_are_located() {
        let text = format!("{CSV_HEADER}\n0,0,60,1,0,0,0,x,\n");
        assert!(matches!(parse_stats_csv(&text), Err(ReportError::Csv { line: 2, .. })));
        assert!(parse_stats_csv("nope\n").is_err());
    }

    #[test]
    fn empty_bug_table() {
        let table = bug_table(&[]);
        assert_eq!((table.total_unique, table.total_vulnerable), (0, 0));
        assert!(bug_table_text(&table).contains("total"));
    }

    #[test]
    fn one_target_two_classes() {
        let table = bug_table(&[
            verdict("tool", "k1", BugClass::HeapOverflow, true),
            verdict("tool", "k2", BugClass::NullDereference, false),
        ]);
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].classes.len(), 2);
        assert_eq!(table.total_vulnerable, 1);
        let text = bug_table_text(&table);
        assert!(text.contains("heap-overflow") && text.contains('✓'));
        assert!(text.contains("null-dereference") && text.contains('✗'));
    }

    #[test]
    fn flaky_and_duplicate_keys_excluded() {
        let mut flaky = verdict("tool", "k3", BugClass::HeapOverflow, true);
        flaky.flaky = true;
        let table = bug_table(&[
            verdict("tool", "k1", BugClass::Other, false),
            verdict("tool", "k1", BugClass::Other, false),
            flaky,
        ]);
        assert_eq!(table.total_unique, 1);
    }

    #[test]
    fn ordering_by_target_then_class() {
        let table = bug_table(&[
            verdict("zeta", "a", BugClass::StackOverflow, true),
            verdict("alpha", "b", BugClass::StackOverflow, true),
            verdict("alpha", "c", BugClass::HeapOverflow, false),
        ]);
        let targets: Vec<&str> = table.rows.iter().map(|r| r.target.as_str()).collect();
        assert_eq!(targets, ["alpha", "zeta"]);
        assert_eq!(table.rows[0].classes[0].class, BugClass::HeapOverflow);
    }

    #[test]
    fn empty_svgs_have_axes_only() {
        let stats = CampaignStats::default();
        let cov = coverage_svg(&stats);
        assert!(cov.contains("<path") && !cov.contains("<polyline"));
        assert!(!timeouts_svg(&stats).contains("<rect x="));
    }

    #[test]
    fn monotone_stats_give_monotone_polyline() {
        let mut stats = CampaignStats::default();
        stats.rows = (0..6).map(|i| row(i, i * i, 0)).collect();
        let svg = coverage_svg(&stats);
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<f64> = points
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(ys.len(), 6);
        assert!(ys.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn emission_is_deterministic() {
        let mut stats = CampaignStats::default();
        stats.rows = vec![row(0, 1, 2), row(1, 4, 8)];
        assert_eq!(timeouts_svg(&stats), timeouts_svg(&stats.clone()));
        assert_eq!(stats_json(&stats), stats_json(&stats.clone()));
        assert_eq!(parse_stats_json(&stats_json(&stats)).unwrap(), stats);
    }
}
