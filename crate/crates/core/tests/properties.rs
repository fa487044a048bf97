//! Property tests over seeded random logs and interval sets.

mod common;

use common::*;
use edlog::analytics::{
    classify_quadrants, compute_los, crowdedness_threshold, mine_dfg, path_statistics,
    simultaneity_counts, Aggregation, Quadrant,
};
use edlog::analytics::stats::nearest_rank_percentile;
use edlog::log::log_statistics;
use edlog::serialize::csv::{read_csv_from, write_csv_to, CsvOptions};
use edlog::serialize::xes::{read_xes_from, write_xes_to};
use edlog::{ActivityKind, EventLog, TimestampFormat};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use std::path::Path;

fn csv_round_trip(log: &EventLog, opts: &CsvOptions) -> EventLog {
    let mut buf = Vec::new();
    write_csv_to(log, &mut buf, opts).unwrap();
    read_csv_from(buf.as_slice(), Path::new("mem.csv"), opts).unwrap()
}

fn shuffled(log: &EventLog, seed: u64) -> EventLog {
    let mut out = log.clone();
    out.traces.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip_is_lossless(seed in any::<u64>(), dense in any::<bool>(), iso in any::<bool>()) {
        let log = random_log(seed, 25);
        let opts = CsvOptions {
            dense,
            timestamp_format: if iso { TimestampFormat::Iso } else { TimestampFormat::Dotted },
            ..CsvOptions::default()
        };
        let back = csv_round_trip(&log, &opts);
        prop_assert!(back.same_traces(&log));
    }

    #[test]
    fn xes_round_trip_is_lossless_and_well_nested(seed in any::<u64>()) {
        let log = random_log(seed, 25);
        let mut buf = Vec::new();
        write_xes_to(&log, &mut buf).unwrap();
        let (traces, events) = xes_structure(&buf).map_err(TestCaseError::fail)?;
        prop_assert_eq!((traces, events), (log.case_count(), log.event_count()));
        let back = read_xes_from(buf.as_slice(), Path::new("mem.xes")).unwrap();
        prop_assert!(back.same_traces(&log));
    }

    #[test]
    fn dfg_equals_enumeration(seed in any::<u64>()) {
        let log = random_log(seed, 60);
        naive_dfg_check(&log, &mine_dfg(&log)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn dfg_conserves_occurrences(seed in any::<u64>()) {
        let log = random_log(seed, 60);
        let dfg = mine_dfg(&log);
        let starts: u64 = dfg.start.iter().map(|s| s.case_count).sum();
        let ends: u64 = dfg.end.iter().map(|s| s.case_count).sum();
        let nonempty = log.traces.iter().filter(|t| !t.events.is_empty()).count() as u64;
        prop_assert_eq!(starts, nonempty);
        prop_assert_eq!(ends, nonempty);
        for n in &dfg.nodes {
            let a = n.activity;
            let start = dfg.start.iter().find(|s| s.activity == a).map_or(0, |s| s.case_count);
            let end = dfg.end.iter().find(|s| s.activity == a).map_or(0, |s| s.case_count);
            let inflow: u64 = dfg.edges.iter().filter(|e| e.to == a).map(|e| e.occurrences).sum();
            let outflow: u64 = dfg.edges.iter().filter(|e| e.from == a).map(|e| e.occurrences).sum();
            prop_assert_eq!(inflow + start, n.occurrences);
            prop_assert_eq!(outflow + end, n.occurrences);
        }
        for e in &dfg.edges {
            prop_assert!(dfg.node(e.from).is_some() && dfg.node(e.to).is_some());
        }
    }

    #[test]
    fn path_statistics_equal_enumeration(seed in any::<u64>()) {
        let log = random_log(seed, 40);
        let dfg = mine_dfg(&log);
        for a in ActivityKind::ALL {
            for b in ActivityKind::ALL {
                let p = path_statistics(&log, a, b, Aggregation::Pooled);
                naive_path_check(&log, a, b, &p).map_err(TestCaseError::fail)?;
                let cov = |k| dfg.node(k).map_or(0.0, |n| n.case_pct);
                prop_assert!(p.case_coverage_pct <= cov(a).min(cov(b)));
            }
        }
    }

    #[test]
    fn statistics_ignore_trace_order(seed in any::<u64>()) {
        let log = random_log(seed, 40);
        let other = shuffled(&log, seed ^ 0x5eed);
        prop_assert_eq!(mine_dfg(&log), mine_dfg(&other));
        prop_assert_eq!(log_statistics(&log), log_statistics(&other));
        let p = path_statistics(&log, ActivityKind::VitalSignCheck, ActivityKind::VitalSignCheck, Aggregation::Pooled);
        let q = path_statistics(&other, ActivityKind::VitalSignCheck, ActivityKind::VitalSignCheck, Aggregation::Pooled);
        prop_assert_eq!(p, q);
    }

    #[test]
    fn sub_logs_partition_the_log(seed in any::<u64>(), modulus in 2i64..5) {
        let log = random_log(seed, 40);
        let keep = |t: &edlog::Trace| t.case_id % modulus == 0;
        let a = log.sub_log(keep);
        let b = log.sub_log(|t| !keep(t));
        prop_assert_eq!(a.case_count() + b.case_count(), log.case_count());
        prop_assert_eq!(a.event_count() + b.event_count(), log.event_count());
        for t in a.traces.iter().chain(&b.traces) {
            prop_assert!(log.traces.contains(t));
        }
    }

    #[test]
    fn quadrant_shares_add_up(seed in any::<u64>(), threshold in 1.0f64..900.0) {
        let log = random_log(seed, 60);
        let mut records = compute_los(&log);
        let table = classify_quadrants(&mut records, threshold);
        let classified: f64 = [Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4]
            .iter()
            .map(|q| table.share(*q).pct)
            .sum();
        if table.total > 0 {
            prop_assert!((classified - (100.0 - table.share(Quadrant::Unclassified).pct)).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_equals_pairwise(seed in any::<u64>(), n in 0usize..300) {
        let stays = random_intervals(seed, n);
        prop_assert_eq!(simultaneity_counts(&stays, false).unwrap(), pairwise_counts(&stays));
        let with_self: Vec<u32> = pairwise_counts(&stays).iter().map(|c| c + 1).collect();
        prop_assert_eq!(simultaneity_counts(&stays, true).unwrap(), with_self);
    }

    #[test]
    fn nearest_rank_definition(values in prop::collection::vec(0u32..50, 1..200), p in 0.0f64..=100.0) {
        let v = crowdedness_threshold(&values, p).unwrap();
        let n = values.len() as f64;
        let at_or_below = values.iter().filter(|x| **x <= v).count() as f64;
        let below = values.iter().filter(|x| **x < v).count() as f64;
        prop_assert!(values.contains(&v));
        prop_assert!(at_or_below / n * 100.0 >= p - 1e-9);
        prop_assert!(below / n * 100.0 < p.max(f64::MIN_POSITIVE) || below == 0.0);
        prop_assert_eq!(nearest_rank_percentile(&values, p).unwrap(), v);
    }

    #[test]
    fn event_count_formula(seed in any::<u64>(), cfg in 0u64..30) {
        let (ex, truth) = synth_extraction(&small_params(seed, 60, defect_config(cfg)));
        prop_assert_eq!(ex.log.event_count() as u64, truth.expected_events);
        prop_assert!(offset_violations(&edlog::extract::filter_pre_arrival_events(ex.log).log).is_empty());
    }
}
