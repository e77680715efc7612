use hdlfuzz::coverage::{bucket_bit, bucketize, observe, CoverageMap, GlobalCoverage, MAP_SIZE};
use proptest::prelude::*;

/// Reference table: upper bound of each bucket, in order.
const BUCKET_UPPER: [u8; 9] = [0, 1, 2, 3, 7, 15, 31, 127, 255];

fn reference_bucket(count: u8) -> u8 {
    BUCKET_UPPER.iter().position(|&hi| count <= hi).unwrap() as u8
}

#[test]
fn every_counter_value_buckets_per_table() {
    for c in 0..=255u8 {
        assert_eq!(bucketize(c), reference_bucket(c), "count {c}");
        let expected_bit = match reference_bucket(c) {
            0 => 0,
            b => 1u8 << (b - 1),
        };
        assert_eq!(bucket_bit(c), expected_bit);
    }
}

#[test]
fn protocol_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut map = CoverageMap::new();
    map.set(0, 9);
    map.set(MAP_SIZE - 1, 255);
    let path = dir.path().join("cov");
    std::fs::write(&path, map.as_bytes()).unwrap();
    assert_eq!(CoverageMap::read_file(&path).unwrap(), map);
    assert!(CoverageMap::read_file(&dir.path().join("absent")).unwrap().is_empty());
    std::fs::write(dir.path().join("cov.meta"), "812\n").unwrap();
    assert_eq!(hdlfuzz::coverage::read_meta(&path), Some(812));
}

#[test]
fn oversized_and_short_files_are_normalized() {
    let short = CoverageMap::from_bytes(&[1, 2, 3]);
    assert_eq!(short.nonzero().collect::<Vec<_>>(), [(0, 1), (1, 2), (2, 3)]);
    let long = CoverageMap::from_bytes(&vec![1u8; MAP_SIZE + 10]);
    assert_eq!(long.nonzero().count(), MAP_SIZE);
}

fn arb_map() -> impl Strategy<Value = CoverageMap> {
    prop::collection::vec((0usize..MAP_SIZE, any::<u8>()), 0..40).prop_map(|cells| {
        let mut map = CoverageMap::new();
        for (i, c) in cells {
            map.set(i, c);
        }
        map
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn observe_is_idempotent(maps in prop::collection::vec(arb_map(), 1..8)) {
        let mut global = GlobalCoverage::new();
        for m in &maps {
            global.observe(m);
        }
        for m in &maps {
            let (novel, after) = observe(m, &global);
            prop_assert!(!novel);
            prop_assert_eq!(&after, &global);
        }
    }

    #[test]
    fn observe_is_order_insensitive(maps in prop::collection::vec(arb_map(), 1..8), rot in 0usize..8) {
        let mut forward = GlobalCoverage::new();
        maps.iter().for_each(|m| { forward.observe(m); });
        let mut shuffled = GlobalCoverage::new();
        let k = rot % maps.len();
        let mut order: Vec<&CoverageMap> = maps.iter().cycle().skip(k).take(maps.len()).collect();
        order.reverse();
        order.into_iter().for_each(|m| { shuffled.observe(m); });
        prop_assert_eq!(forward.seen(), shuffled.seen());
        prop_assert_eq!(forward.edges_hit(), shuffled.edges_hit());
    }

    #[test]
    fn masks_only_gain_bits(maps in prop::collection::vec(arb_map(), 1..8)) {
        let mut global = GlobalCoverage::new();
        let mut prev = global.seen().to_vec();
        for m in &maps {
            let obs = global.observe(m);
            let now = global.seen();
            prop_assert!(prev.iter().zip(now).all(|(a, b)| a & b == *a));
            let gained: usize = prev.iter().zip(now).map(|(a, b)| (b & !a).count_ones() as usize).sum();
            prop_assert_eq!(gained, obs.new_buckets);
            prop_assert_eq!(global.edges_hit(), now.iter().filter(|m| **m != 0).count());
            prev = now.to_vec();
        }
    }
}
