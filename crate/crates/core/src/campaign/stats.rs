use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// One row per elapsed interval.
///
/// `edges_hit` and `coverage_pct` are cumulative over the campaign;
/// `interval_edges` and `interval_coverage_pct` count only edges exercised
/// during this interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub interval: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub execs: u64,
    pub admissions: u64,
    pub timeouts: u64,
    pub unique_crashes: usize,
    pub edges_hit: usize,
    pub coverage_pct: Option<f64>,
    #[serde(default)]
    pub interval_edges: usize,
    #[serde(default)]
    pub interval_coverage_pct: Option<f64>,
}

impl IntervalRow {
    pub fn zero(interval: usize, start_s: f64, end_s: f64) -> Self {
        Self {
            interval,
            start_s,
            end_s,
            execs: 0,
            admissions: 0,
            timeouts: 0,
            unique_crashes: 0,
            edges_hit: 0,
            coverage_pct: None,
            interval_edges: 0,
            interval_coverage_pct: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub rows: Vec<IntervalRow>,
    /// Dedup keys of every crash seen, in sorted order.
    #[serde(default)]
    pub crash_keys: BTreeSet<String>,
    #[serde(default)]
    pub total_edges: Option<u64>,
}

impl CampaignStats {
    pub fn total_execs(&self) -> u64 {
        self.rows.iter().map(|r| r.execs).sum()
    }

    pub fn total_timeouts(&self) -> u64 {
        self.rows.iter().map(|r| r.timeouts).sum()
    }

    pub fn total_admissions(&self) -> u64 {
        self.rows.iter().map(|r| r.admissions).sum()
    }
}

/// Seconds rounded to whole milliseconds, so rows survive a text round trip.
pub fn seconds(ms: u128) -> f64 {
    ms as f64 / 1000.0
}

/// Percentage rounded to four decimal places.
pub fn percent(hit: usize, total: Option<u64>) -> Option<f64> {
    match total {
        Some(t) if t > 0 => Some((hit as f64 * 100.0 / t as f64 * 10_000.0).round() / 10_000.0),
        _ => None,
    }
}
