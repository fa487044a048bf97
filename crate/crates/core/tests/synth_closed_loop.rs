//! Generated tables pushed through extraction and the quality suite must
//! reproduce the generator's ground truth exactly.

mod common;

use common::*;
use edlog::analytics::{simultaneity_counts, stay_intervals};
use edlog::extract::filter_pre_arrival_events;
use edlog::quality::{run_quality_checks, RuleSet};
use edlog::source::check_referential_integrity;
use edlog::synth::{generate_tables, DefectRates, GenParams};

#[test]
fn event_counts_follow_formula() {
    let (ex, truth) = synth_extraction(&small_params(11, 400, defect_config(3)));
    assert_eq!(ex.log.event_count() as u64, truth.expected_events);
    let sizes = trace_sizes(&ex.log);
    assert_eq!(sizes.len(), truth.stay_counts.len());
    for c in &truth.stay_counts {
        assert_eq!(sizes[&c.stay_id], c.expected_events(), "stay {}", c.stay_id);
    }
}

#[test]
fn cleaning_rejects_exactly_the_invalid_stays() {
    let (ex, truth) = synth_extraction(&small_params(12, 500, defect_config(5)));
    let mut rejected = ex.rejected_stays.clone();
    rejected.sort();
    assert!(!truth.invalid_duration.is_empty());
    assert_eq!(rejected, truth.invalid_duration);
    assert_eq!(ex.log.case_count() as u64, truth.valid_stays);
}

#[test]
fn quality_report_equals_injected_defects() {
    for i in 0..4 {
        let (ex, truth) = synth_extraction(&small_params(100 + i, 300, defect_config(i)));
        let report = run_quality_checks(&ex.log, &RuleSet::default()).unwrap();
        let bad = quality_vs_truth(&report, &truth);
        assert!(bad.is_empty(), "config {i}: {bad:?}");
    }
}

#[test]
fn pre_arrival_filter_removes_injected_rows() {
    let mut defects = DefectRates::NONE;
    defects.pre_arrival_event_pct = 5.0;
    let (ex, truth) = synth_extraction(&small_params(5, 600, defects));
    assert!(truth.pre_arrival_count > 0);
    let filtered = filter_pre_arrival_events(ex.log);
    assert_eq!(filtered.removed as u64, truth.pre_arrival_count);
    assert!(offset_violations(&filtered.log).is_empty());
}

#[test]
fn clean_generation_has_no_findings() {
    let (ex, _) = synth_extraction(&small_params(8, 300, DefectRates::NONE));
    let report = run_quality_checks(&ex.log, &RuleSet::default()).unwrap();
    assert!(!report.has_findings(), "{}", report.summary());
}

#[test]
fn overlap_truth_matches_sweep() {
    let (ex, truth) = synth_extraction(&small_params(21, 500, defect_config(1)));
    let stays = stay_intervals(&ex.log);
    let by_id: std::collections::HashMap<i64, u32> = stays
        .iter()
        .map(|s| s.stay_id)
        .zip(simultaneity_counts(&stays, false).unwrap())
        .collect();
    let oracle = truth.overlap_counts.as_ref().expect("small log carries overlap truth");
    for (c, want) in truth.stay_counts.iter().zip(oracle) {
        assert_eq!(by_id[&c.stay_id], *want, "stay {}", c.stay_id);
    }
}

#[test]
fn generated_tables_have_no_orphans() {
    for seed in 0..5 {
        let (t, _) = generate_tables(&small_params(seed, 200, defect_config(seed))).unwrap();
        assert_eq!(check_referential_integrity(&t).total_orphans(), 0);
    }
}

#[test]
fn written_files_are_byte_identical_for_a_seed() {
    let p = GenParams { n_patients: 50, ..GenParams::default() };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let (t, truth) = generate_tables(&p).unwrap();
        edlog::synth::write_synthetic(d.path(), &t, &truth).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for n in names {
        let a = std::fs::read(dirs[0].path().join(&n)).unwrap();
        let b = std::fs::read(dirs[1].path().join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn comparison_notices_a_miscounted_defect() {
    let (ex, mut truth) = synth_extraction(&small_params(3, 200, defect_config(2)));
    let report = run_quality_checks(&ex.log, &RuleSet::default()).unwrap();
    assert!(quality_vs_truth(&report, &truth).is_empty());
    truth.pain_out_of_range.pop().expect("some pain defects");
    truth.celsius_values += 1;
    assert_eq!(quality_vs_truth(&report, &truth).len(), 2);
}
