//! Edge-coverage map, hit-count bucketing and campaign-wide accumulation.
//!
//! Wire protocol: the fuzzer creates a zero-filled file of exactly
//! [`MAP_SIZE`] bytes per execution and passes its path in
//! `HDLFUZZ_COV_PATH`. The target increments the counter at
//! `(prev ^ cur) % MAP_SIZE` on every basic block, then sets
//! `prev = cur >> 1`, where `cur` is the block's compile-time random 16-bit
//! id. Counters saturate at 255. The target may write the total number of
//! instrumented blocks as a decimal integer to `HDLFUZZ_COV_PATH + ".meta"`.

use std::fmt;
use std::path::Path;

pub const MAP_SIZE: usize = 1 << 16;
pub const COV_PATH_ENV: &str = "HDLFUZZ_COV_PATH";
pub const META_SUFFIX: &str = ".meta";

/// Raw saturating hit counters for one execution.
#[derive(Clone, PartialEq, Eq)]
pub struct CoverageMap {
    counters: Box<[u8]>,
}

impl Default for CoverageMap {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for CoverageMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoverageMap")
            .field("nonzero", &self.nonzero().count())
            .finish()
    }
}

impl CoverageMap {
    pub fn new() -> Self {
        Self {
            counters: vec![0u8; MAP_SIZE].into_boxed_slice(),
        }
    }

    /// Builds a map from protocol bytes. Short input is zero-padded and
    /// anything past `MAP_SIZE` is ignored.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut map = Self::new();
        let n = bytes.len().min(MAP_SIZE);
        map.counters[..n].copy_from_slice(&bytes[..n]);
        map
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.counters
    }

    pub fn get(&self, index: usize) -> u8 {
        self.counters[index % MAP_SIZE]
    }

    /// Saturating increment.
    pub fn hit(&mut self, index: usize) {
        let c = &mut self.counters[index % MAP_SIZE];
        *c = c.saturating_add(1);
    }

    pub fn set(&mut self, index: usize, count: u8) {
        self.counters[index % MAP_SIZE] = count;
    }

    /// Records a transition into block `cur` the way the target shim does,
    /// returning the next `prev`.
    pub fn record_transition(&mut self, prev: u16, cur: u16) -> u16 {
        self.hit(usize::from(prev ^ cur));
        cur >> 1
    }

    /// Non-zero `(index, count)` pairs in index order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.counters
            .chunks_exact(8)
            .enumerate()
            .filter(|(_, chunk)| u64::from_ne_bytes((*chunk).try_into().unwrap()) != 0)
            .flat_map(|(word, chunk)| {
                chunk
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0)
                    .map(move |(i, c)| (word * 8 + i, *c))
            })
    }

    pub fn is_empty(&self) -> bool {
        self.nonzero().next().is_none()
    }

    /// Reads a protocol file. A missing file yields an all-zero map.
    pub fn read_file(path: &Path) -> std::io::Result<Self> {
        match std::fs::read(path) {
            Ok(bytes) => Ok(Self::from_bytes(&bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e),
        }
    }
}

/// Parses the `.meta` sidecar: a single positive decimal integer.
pub fn parse_meta(text: &str) -> Option<u64> {
    text.trim().parse::<u64>().ok().filter(|n| *n > 0)
}

pub fn read_meta(cov_path: &Path) -> Option<u64> {
    let mut meta = cov_path.as_os_str().to_owned();
    meta.push(META_SUFFIX);
    std::fs::read_to_string(meta).ok().and_then(|t| parse_meta(&t))
}

/// Maps a raw hit count to one of nine buckets:
/// `0, 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128-255`.
pub const fn bucketize(count: u8) -> u8 {
    match count {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        4..=7 => 4,
        8..=15 => 5,
        16..=31 => 6,
        32..=127 => 7,
        _ => 8,
    }
}

/// Bit recorded in [`GlobalCoverage`] for a non-zero bucket.
pub const fn bucket_bit(count: u8) -> u8 {
    match bucketize(count) {
        0 => 0,
        b => 1 << (b - 1),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Observation {
    /// Edges hit for the first time.
    pub new_edges: usize,
    /// Edge/bucket pairs not seen before (includes `new_edges`).
    pub new_buckets: usize,
}

impl Observation {
    pub fn is_novel(&self) -> bool {
        self.new_buckets > 0
    }
}

/// Bucket masks accumulated over a campaign.
#[derive(Clone, PartialEq, Eq)]
pub struct GlobalCoverage {
    seen: Box<[u8]>,
    edges_hit: usize,
    pub total_edges: Option<u64>,
}

impl fmt::Debug for GlobalCoverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GlobalCoverage")
            .field("edges_hit", &self.edges_hit)
            .field("total_edges", &self.total_edges)
            .finish()
    }
}

impl Default for GlobalCoverage {
    fn default() -> Self {
        Self::new()
    }
}

impl GlobalCoverage {
    pub fn new() -> Self {
        Self {
            seen: vec![0u8; MAP_SIZE].into_boxed_slice(),
            edges_hit: 0,
            total_edges: None,
        }
    }

    pub fn with_total(total_edges: Option<u64>) -> Self {
        Self {
            total_edges,
            ..Self::new()
        }
    }

    pub fn seen(&self) -> &[u8] {
        &self.seen
    }

    pub fn edges_hit(&self) -> usize {
        self.edges_hit
    }

    /// Whether `map` would add anything, without recording it.
    pub fn would_be_novel(&self, map: &CoverageMap) -> bool {
        map.nonzero()
            .any(|(i, c)| self.seen[i] & bucket_bit(c) == 0)
    }

    /// ORs the map's bucket bits into the accumulated masks.
    pub fn observe(&mut self, map: &CoverageMap) -> Observation {
        let mut obs = Observation::default();
        for (i, count) in map.nonzero() {
            let bit = bucket_bit(count);
            let mask = &mut self.seen[i];
            if *mask & bit == 0 {
                if *mask == 0 {
                    obs.new_edges += 1;
                }
                *mask |= bit;
                obs.new_buckets += 1;
            }
        }
        self.edges_hit += obs.new_edges;
        obs
    }

    /// `edges_hit / total_edges`, when the target reported a total.
    pub fn coverage_fraction(&self) -> Option<f64> {
        match self.total_edges {
            Some(total) if total > 0 => Some(self.edges_hit as f64 / total as f64),
            _ => None,
        }
    }
}

/// Functional form of [`GlobalCoverage::observe`].
pub fn observe(map: &CoverageMap, global: &GlobalCoverage) -> (bool, GlobalCoverage) {
    let mut updated = global.clone();
    let novel = updated.observe(map).is_novel();
    (novel, updated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_table_boundaries() {
        assert_eq!(bucketize(0), 0);
        assert_eq!(bucketize(7), 4);
        assert_eq!(bucketize(255), 8);
        assert_eq!(bucket_bit(0), 0);
        assert_eq!(bucket_bit(1), 0b1);
        assert_eq!(bucket_bit(200), 0b1000_0000);
    }

    #[test]
    fn counters_saturate() {
        let mut map = CoverageMap::new();
        for _ in 0..300 {
            map.hit(7);
        }
        assert_eq!(map.get(7), 255);
        map.hit(MAP_SIZE + 3);
        assert_eq!(map.get(3), 1);
    }

    #[test]
    fn zero_map_is_not_novel() {
        let mut global = GlobalCoverage::new();
        assert!(!global.observe(&CoverageMap::new()).is_novel());
        assert_eq!(global.edges_hit(), 0);
    }

    #[test]
    fn repeated_map_is_novel_once() {
        let mut map = CoverageMap::new();
        map.set(5, 1);
        let mut global = GlobalCoverage::new();
        assert!(global.observe(&map).is_novel());
        assert!(!global.observe(&map).is_novel());
        assert_eq!(global.edges_hit(), 1);
    }

    #[test]
    fn new_bucket_on_same_edge_is_novel() {
        let mut a = CoverageMap::new();
        a.set(9, 3);
        let mut b = CoverageMap::new();
        b.set(9, 12);
        let mut global = GlobalCoverage::new();
        let first = global.observe(&a);
        let second = global.observe(&b);
        assert_eq!(first, Observation { new_edges: 1, new_buckets: 1 });
        assert_eq!(second, Observation { new_edges: 0, new_buckets: 1 });
        // bucket 3 -> bit 2, bucket 5 -> bit 4
        assert_eq!(global.seen()[9], 0b0001_0100);
        assert_eq!(global.edges_hit(), 1);
    }

    #[test]
    fn fraction_of_total() {
        let mut global = GlobalCoverage::with_total(Some(1000));
        assert_eq!(global.coverage_fraction(), Some(0.0));
        let mut map = CoverageMap::new();
        for i in 0..137 {
            map.set(i * 3, 1);
        }
        global.observe(&map);
        assert_eq!(global.coverage_fraction(), Some(0.137));
        assert_eq!(GlobalCoverage::new().coverage_fraction(), None);
    }

    #[test]
    fn transitions_follow_protocol() {
        let mut map = CoverageMap::new();
        let prev = map.record_transition(0, 0xBEEF);
        assert_eq!(map.get(0xBEEF), 1);
        assert_eq!(prev, 0xBEEF >> 1);
        map.record_transition(prev, 0x1234);
        assert_eq!(map.get(usize::from((0xBEEFu16 >> 1) ^ 0x1234)), 1);
    }

    #[test]
    fn meta_parsing() {
        assert_eq!(parse_meta("1234\n"), Some(1234));
        assert_eq!(parse_meta("0"), None);
        assert_eq!(parse_meta("-3"), None);
        assert_eq!(parse_meta("lots"), None);
    }
}
