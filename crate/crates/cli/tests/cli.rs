use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use edlog::serialize::csv::CsvOptions;
use edlog::serialize::read_log;
use serde_json::Value;
use tempfile::TempDir;

const TABLES: [&str; 6] = ["edstays", "triage", "vitalsign", "medrecon", "pyxis", "diagnosis"];

fn edlog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edlog"))
        .args(args)
        .env_remove("EDLOG_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = edlog(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset; `defects` is a TOML `[defects]` body.
fn synth(dir: &Path, seed: u64, defects: &str) -> (PathBuf, Value) {
    let params = dir.join("params.toml");
    fs::write(
        &params,
        format!("seed = {seed}\nn_patients = 120\n\n[defects]\n{defects}"),
    )
    .unwrap();
    let data = dir.join("data");
    ok(&["synth", "--params", s(&params), "--out", s(&data)]);
    let truth = serde_json::from_str(&fs::read_to_string(data.join("ground_truth.json")).unwrap()).unwrap();
    (data, truth)
}

const HEAVY: &str = "missing_acuity_pct = 10.0\nhome_with_hadm_pct = 20.0\n\
    admitted_without_hadm_pct = 10.0\npain_out_of_range_pct = 10.0\n\
    pre_arrival_event_pct = 10.0\ncelsius_temperature_pct = 5.0\n";

fn stat(stdout: &str, label: &str) -> u64 {
    let line = stdout
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no {label:?} line in\n{stdout}"));
    line.split_whitespace()
        .find_map(|w| w.parse().ok())
        .unwrap_or_else(|| panic!("no number in {line:?}"))
}

fn truth_u64(truth: &Value, key: &str) -> u64 {
    truth[key].as_u64().unwrap_or_else(|| panic!("ground truth lacks {key}"))
}

fn truth_len(truth: &Value, key: &str) -> u64 {
    truth[key].as_array().unwrap_or_else(|| panic!("ground truth lacks {key}")).len() as u64
}

#[test]
fn synth_writes_six_tables_deterministically() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["synth", "--out", s(&a)]);
    ok(&["synth", "--out", s(&b)]);
    for t in TABLES {
        let f = format!("{t}.csv");
        assert!(a.join(&f).is_file(), "{f} missing");
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f} differs");
    }
    assert_eq!(
        fs::read(a.join("ground_truth.json")).unwrap(),
        fs::read(b.join("ground_truth.json")).unwrap()
    );
}

#[test]
fn extract_writes_both_formats_and_prints_stats() {
    let dir = TempDir::new().unwrap();
    let (data, truth) = synth(dir.path(), 3, "");
    let csv = dir.path().join("log.csv");
    let xes = dir.path().join("log.xes");
    let out = ok(&["extract", "--input", s(&data), "--out-csv", s(&csv), "--out-xes", s(&xes)]);
    assert_eq!(stat(&out, "# Events"), truth_u64(&truth, "expected_events"));
    assert_eq!(stat(&out, "# Cases"), truth_u64(&truth, "valid_stays"));
    let from_csv = read_log(&csv, &CsvOptions::default()).unwrap();
    let from_xes = read_log(&xes, &CsvOptions::default()).unwrap();
    assert!(from_csv.same_traces(&from_xes));
    assert_eq!(from_csv.event_count() as u64, truth_u64(&truth, "expected_events"));
}

#[test]
fn filter_prints_injected_pre_arrival_count() {
    let dir = TempDir::new().unwrap();
    let (data, truth) = synth(dir.path(), 11, HEAVY);
    let expected = truth_u64(&truth, "pre_arrival_count");
    assert!(expected > 0);
    let csv = dir.path().join("log.csv");
    let out = ok(&["extract", "--input", s(&data), "--out-csv", s(&csv), "--filter-pre-arrival"]);
    assert_eq!(stat(&out, "Pre-arrival events removed"), expected);
    assert_eq!(stat(&out, "# Events"), truth_u64(&truth, "expected_events") - expected);
}

#[test]
fn missing_table_is_an_io_error_naming_the_table() {
    let dir = TempDir::new().unwrap();
    let (data, _) = synth(dir.path(), 1, "");
    fs::remove_file(data.join("pyxis.csv")).unwrap();
    let out = edlog(&["extract", "--input", s(&data), "--out-csv", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("pyxis"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn extract_needs_an_output() {
    let dir = TempDir::new().unwrap();
    let (data, _) = synth(dir.path(), 1, "");
    assert_eq!(code(&edlog(&["extract", "--input", s(&data)])), 1);
}

fn extracted(dir: &Path, seed: u64, defects: &str) -> (PathBuf, Value) {
    let (data, truth) = synth(dir, seed, defects);
    let csv = dir.join("log.csv");
    ok(&["extract", "--input", s(&data), "--out-csv", s(&csv)]);
    (csv, truth)
}

fn report(dir: &Path, log: &Path) -> Value {
    let path = dir.join("report.json");
    ok(&["validate", "--log", s(log), "--report", s(&path)]);
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn affected(report: &Value, kind: &str, needle: &str) -> u64 {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["kind"] == kind && r["item"].as_str().unwrap().contains(needle))
        .unwrap_or_else(|| panic!("no {kind} result for {needle}"))["affected"]
        .as_u64()
        .unwrap()
}

#[test]
fn validate_clean_data_has_no_findings() {
    let dir = TempDir::new().unwrap();
    let none = "missing_acuity_pct = 0.0\nhome_with_hadm_pct = 0.0\nadmitted_without_hadm_pct = 0.0\n\
        pain_out_of_range_pct = 0.0\npre_arrival_event_pct = 0.0\ncelsius_temperature_pct = 0.0\n\
        invalid_duration_pct = 0.0\n";
    let (log, _) = extracted(dir.path(), 5, none);
    let r = report(dir.path(), &log);
    let findings: Vec<&Value> = r["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|x| x["is_finding"] == true && x["affected"].as_u64() != Some(0))
        .collect();
    assert!(findings.is_empty(), "{findings:?}");
}

#[test]
fn validate_recovers_injected_defects_and_exits_zero() {
    let dir = TempDir::new().unwrap();
    let (log, truth) = extracted(dir.path(), 9, HEAVY);
    let r = report(dir.path(), &log);
    assert_eq!(affected(&r, "missing_value", "acuity"), truth_len(&truth, "missing_acuity"));
    assert_eq!(affected(&r, "dependency", "\"HOME\""), truth_len(&truth, "home_with_hadm"));
    assert_eq!(affected(&r, "dependency", "\"ADMITTED\""), truth_len(&truth, "admitted_without_hadm"));
    assert_eq!(affected(&r, "range", "pain"), truth_len(&truth, "pain_out_of_range"));
    assert!(truth_len(&truth, "missing_acuity") > 0);
}

#[test]
fn validate_rejects_bad_rules_file() {
    let dir = TempDir::new().unwrap();
    let (log, _) = extracted(dir.path(), 2, "");
    let rules = dir.path().join("rules.toml");
    fs::write(&rules, "not_a_rule = 3\n").unwrap();
    let out = edlog(&[
        "validate", "--log", s(&log), "--report", s(&dir.path().join("r.json")), "--rules", s(&rules),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("r.json").exists());
}

fn dot_lines(dot: &Path, prefix: fn(&str) -> bool) -> usize {
    fs::read_to_string(dot).unwrap().lines().filter(|l| prefix(l.trim())).count()
}

fn is_node(l: &str) -> bool {
    l.starts_with('a') && l.as_bytes().get(1).is_some_and(u8::is_ascii_digit) && !l.contains("->")
}

fn is_activity_edge(l: &str) -> bool {
    l.starts_with('a') && l.contains(" -> a")
}

#[test]
fn mine_full_log_has_six_nodes() {
    let dir = TempDir::new().unwrap();
    let (log, _) = extracted(dir.path(), 4, "");
    let dot = dir.path().join("map.dot");
    ok(&["mine", "--log", s(&log), "--dot", s(&dot)]);
    assert_eq!(dot_lines(&dot, is_node), 6);
    let stats: Value = serde_json::from_str(&fs::read_to_string(dot.with_extension("json")).unwrap()).unwrap();
    assert_eq!(stats["nodes"].as_array().unwrap().len(), 6);
    assert_eq!(dot_lines(&dot, is_activity_edge), stats["edges"].as_array().unwrap().len());
}

#[test]
fn mine_cohort_uses_the_sub_log() {
    let dir = TempDir::new().unwrap();
    let (log, _) = extracted(dir.path(), 4, "");
    let expected = read_log(&log, &CsvOptions::default())
        .unwrap()
        .traces
        .iter()
        .filter(|t| t.acuity() == Some(3))
        .count();
    assert!(expected > 0);
    let dot = dir.path().join("map.dot");
    let stats = dir.path().join("stats.json");
    ok(&["mine", "--log", s(&log), "--dot", s(&dot), "--stats", s(&stats), "--cohort", "acuity=3"]);
    let v: Value = serde_json::from_str(&fs::read_to_string(stats).unwrap()).unwrap();
    assert_eq!(v["case_count"].as_u64(), Some(expected as u64));
}

#[test]
fn mine_full_coverage_floor_keeps_only_universal_edges() {
    let dir = TempDir::new().unwrap();
    let (log, _) = extracted(dir.path(), 4, "");
    let dot = dir.path().join("map.dot");
    ok(&["mine", "--log", s(&log), "--dot", s(&dot), "--min-coverage", "100"]);
    let v: Value = serde_json::from_str(&fs::read_to_string(dot.with_extension("json")).unwrap()).unwrap();
    let universal = v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["case_pct"].as_f64().unwrap() >= 100.0)
        .count();
    assert_eq!(dot_lines(&dot, is_activity_edge), universal);
    assert!(universal < v["edges"].as_array().unwrap().len());
    assert_eq!(dot_lines(&dot, is_node), 6);
}

fn three_stay_log(dir: &Path) -> PathBuf {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/three_stays");
    let csv = dir.join("three.csv");
    ok(&["extract", "--input", s(&input), "--out-csv", s(&csv)]);
    csv
}

#[test]
fn crowdedness_on_three_stays_matches_pairwise_oracle() {
    let dir = TempDir::new().unwrap();
    let log = three_stay_log(dir.path());
    let traces = read_log(&log, &CsvOptions::default()).unwrap().traces;
    let spans: Vec<_> = traces
        .iter()
        .map(|t| (t.case_id, t.enter_time().unwrap(), t.discharge_time().unwrap()))
        .collect();
    let oracle: Vec<(i64, u64)> = spans
        .iter()
        .map(|&(id, e, d)| {
            let n = spans
                .iter()
                .filter(|&&(o, e2, d2)| o != id && e2 <= d && d2 >= e)
                .count();
            (id, n as u64)
        })
        .collect();
    let out_path = dir.path().join("crowd.json");
    let out = ok(&["analyze", "--log", s(&log), "--mode", "crowdedness", "--out", s(&out_path)]);
    let v: Value = serde_json::from_str(&fs::read_to_string(out_path).unwrap()).unwrap();
    let got: Vec<(i64, u64)> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["stay_id"].as_i64().unwrap(), r["simultaneous_count"].as_u64().unwrap()))
        .collect();
    assert_eq!(got, oracle);
    assert_eq!(stat(&out, "Threshold"), v["threshold"].as_u64().unwrap());
    assert_eq!(stat(&out, "Crowded stays") + stat(&out, "Not crowded stays"), 3);
}

#[test]
fn analyze_quadrants_and_paths_write_tables() {
    let dir = TempDir::new().unwrap();
    let (log, truth) = extracted(dir.path(), 6, "");
    let q = dir.path().join("q.csv");
    ok(&["analyze", "--log", s(&log), "--mode", "quadrants", "--out", s(&q)]);
    let text = fs::read_to_string(&q).unwrap();
    let total: u64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, truth_u64(&truth, "valid_stays"));

    let p = dir.path().join("p.csv");
    ok(&[
        "analyze", "--log", s(&log), "--mode", "paths", "--split", "disposition",
        "--paths", "vital>vital,triage>discharge", "--out", s(&p),
    ]);
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("cohort,cases,from,to,"));
    assert!(text.lines().any(|l| l.starts_with("HOME,")));

    let all = dir.path().join("all.json");
    ok(&["analyze", "--log", s(&log), "--mode", "paths", "--out", s(&all)]);
    let v: Value = serde_json::from_str(&fs::read_to_string(all).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 36);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let log = three_stay_log(dir.path());
    let out = dir.path().join("x.json");
    assert_eq!(code(&edlog(&["analyze", "--log", s(&log), "--mode", "bogus", "--out", s(&out)])), 1);
    assert_eq!(
        code(&edlog(&["analyze", "--log", s(&log), "--mode", "paths", "--paths", "vital", "--out", s(&out)])),
        1
    );
    assert_eq!(code(&edlog(&["mine", "--log", s(&log), "--dot", s(&out), "--cohort", "acuity"])), 1);
    assert_eq!(code(&edlog(&["frobnicate"])), 1);
    assert_eq!(code(&edlog(&["--help"])), 0);
    assert!(!out.exists());
}

#[test]
fn unreadable_log_and_bad_data_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&edlog(&["validate", "--log", s(&missing), "--report", s(&out)])), 2);
    let broken = dir.path().join("broken.xes");
    fs::write(&broken, "<log><trace><event></trace></log>").unwrap();
    assert_eq!(code(&edlog(&["validate", "--log", s(&broken), "--report", s(&out)])), 3);
    let unknown = dir.path().join("log.parquet");
    fs::write(&unknown, "").unwrap();
    assert_eq!(code(&edlog(&["validate", "--log", s(&unknown), "--report", s(&out)])), 1);
}

#[test]
fn thread_count_from_flag_or_environment() {
    let dir = TempDir::new().unwrap();
    let log = three_stay_log(dir.path());
    let out = dir.path().join("q.json");
    ok(&["--threads", "1", "analyze", "--log", s(&log), "--mode", "los", "--out", s(&out)]);
    let bad = Command::new(env!("CARGO_BIN_EXE_edlog"))
        .args(["analyze", "--log", s(&log), "--mode", "los", "--out", s(&out)])
        .env("EDLOG_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
}
