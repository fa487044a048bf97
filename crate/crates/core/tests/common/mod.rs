//! Generators and brute-force oracles shared by the integration tests and
//! the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use edlog::analytics::{Dfg, PathStats, StayInterval};
use edlog::extract::{extract_event_log, Extraction};
use edlog::quality::QualityReport;
use edlog::serialize::csv::{write_csv_to, CsvOptions};
use edlog::source::{load_source_tables, IngestOptions};
use edlog::synth::{generate_tables, CountRange, DefectRates, GenParams, GroundTruth};
use edlog::{ActivityKind, AttrKey, AttributeValue, Decimal, Event, EventLog, MappingConfig, Timestamp, Trace};
use quick_xml::events::Event as XmlEvent;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn small_params(seed: u64, n_patients: u32, defects: DefectRates) -> GenParams {
    GenParams {
        seed,
        n_patients,
        stays_per_patient: CountRange::new(1, 3),
        defects,
        ..GenParams::default()
    }
}

pub fn synth_extraction(params: &GenParams) -> (Extraction, GroundTruth) {
    let (tables, truth) = generate_tables(params).expect("valid params");
    let ex = extract_event_log(tables, &MappingConfig::default()).expect("extraction");
    (ex, truth)
}

/// Defect configuration number `i`, each category at its own rate.
pub fn defect_config(i: u64) -> DefectRates {
    let r = |k: u64| ((i * 7 + k * 13) % 23) as f64 + 0.5 * (k % 2) as f64;
    DefectRates {
        missing_acuity_pct: r(1),
        home_with_hadm_pct: r(2) * 2.0,
        admitted_without_hadm_pct: r(3) / 2.0,
        pain_out_of_range_pct: r(4),
        pre_arrival_event_pct: r(5) / 2.0,
        celsius_temperature_pct: r(6) / 3.0,
        invalid_duration_pct: r(7) / 4.0,
    }
}

// ---------------------------------------------------------------------------
// random logs

const TRICKY_TEXT: [&str; 8] = [
    "Abd pain",
    "CHEST PAIN, L SIDE",
    "says \"dizzy\"",
    "<none> & more",
    "fall;\nhead strike",
    "  padded  ",
    "Übelkeit 🤢",
    "tab\there",
];

/// Arbitrary sorted traces over known attributes; ties, repeated activities
/// and markup characters included. Every trace starts with Enter.
pub fn random_log(seed: u64, max_cases: usize) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_cases);
    let base = Timestamp::parse("2150-03-01 00:00:00").unwrap();
    let mut traces = Vec::with_capacity(n);
    for c in 0..n {
        let mut t = Trace::new(30_000_000 + c as i64 * 7);
        t.case_attributes.insert(AttrKey::SUBJECT_ID, AttributeValue::Integer(10_000_000 + rng.random_range(0..50)));
        t.case_attributes.insert(AttrKey::GENDER, AttributeValue::text(["F", "M"][rng.random_range(0..2)]));
        if rng.random_bool(0.9) {
            t.case_attributes.insert(AttrKey::ACUITY, AttributeValue::Integer(rng.random_range(1..=5)));
        }
        let disp = ["HOME", "ADMITTED", "LEFT WITHOUT BEING SEEN"][rng.random_range(0..3)];
        t.case_attributes.insert(AttrKey::DISPOSITION, AttributeValue::text(disp));
        t.case_attributes.insert(
            AttrKey::CHIEFCOMPLAINT,
            AttributeValue::text(TRICKY_TEXT[rng.random_range(0..TRICKY_TEXT.len())]),
        );
        let enter = base + rng.random_range(0..86_400 * 20) as i64;
        let mut events = vec![Event::new(ActivityKind::Enter, enter)];
        if rng.random_bool(0.3) {
            events[0].attributes.insert(AttrKey::HADM_ID, AttributeValue::Integer(rng.random_range(20_000_000..21_000_000)));
        }
        events.push(
            Event::new(ActivityKind::Triage, enter + 1)
                .with(AttrKey::TEMPERATURE, Decimal::new(rng.random_range(950..1020), 1))
                .with(AttrKey::PAIN, ["0", "5", "10", "unable"][rng.random_range(0..4)]),
        );
        let span = rng.random_range(1..600) as i64;
        for _ in 0..rng.random_range(0..15) {
            let k = [
                ActivityKind::VitalSignCheck,
                ActivityKind::MedicineReconciliation,
                ActivityKind::MedicineDispensation,
            ][rng.random_range(0..3)];
            // coarse grid so that ties occur
            let ts = enter + 60 * rng.random_range(1..=span) / 3 * 3;
            let mut e = Event::new(k, ts);
            if k == ActivityKind::VitalSignCheck && rng.random_bool(0.7) {
                e.attributes.insert(AttrKey::TEMPERATURE, Decimal::new(rng.random_range(950..1020), 1).into());
                e.attributes.insert(AttrKey::HEARTRATE, Decimal::new(rng.random_range(50..130), 0).into());
            }
            if k != ActivityKind::VitalSignCheck {
                e.attributes.insert(AttrKey::NAME, AttributeValue::text(TRICKY_TEXT[rng.random_range(0..TRICKY_TEXT.len())]));
            }
            events.push(e);
        }
        let out = enter + 60 * span;
        for s in 1..=rng.random_range(1..=3) {
            events.push(Event::new(ActivityKind::Discharge, out).with(AttrKey::SEQ_NUM, s as i64));
        }
        t.events = events;
        t.sort_events();
        traces.push(t);
    }
    EventLog::new(traces)
}

/// Intervals on a coarse grid so that shared and touching boundaries are
/// frequent.
pub fn random_intervals(seed: u64, n: usize) -> Vec<StayInterval> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Timestamp::parse("2150-01-01 00:00:00").unwrap();
    (0..n)
        .map(|i| {
            let start = rng.random_range(0..2_000) as i64 * 300;
            let len = rng.random_range(0..40) as i64 * 300;
            StayInterval {
                stay_id: i as i64,
                enter: base + start,
                discharge: base + start + len,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// oracles

pub fn overlaps(p: &StayInterval, q: &StayInterval) -> bool {
    !(q.enter > p.discharge || q.discharge < p.enter)
}

pub fn pairwise_counts(stays: &[StayInterval]) -> Vec<u32> {
    (0..stays.len())
        .map(|i| {
            (0..stays.len())
                .filter(|&j| j != i && overlaps(&stays[i], &stays[j]))
                .count() as u32
        })
        .collect()
}

pub fn overlap_is_symmetric(stays: &[StayInterval]) -> bool {
    (0..stays.len()).all(|i| (0..stays.len()).all(|j| overlaps(&stays[i], &stays[j]) == overlaps(&stays[j], &stays[i])))
}

pub fn naive_median_minutes(secs: &[i64]) -> Option<f64> {
    let mut v = secs.to_vec();
    v.sort();
    let n = v.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(v[n / 2] as f64 / 60.0),
        _ => Some((v[n / 2 - 1] + v[n / 2]) as f64 / 120.0),
    }
}

fn pct(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

/// Directly-follows relation by plain enumeration of index pairs.
pub fn naive_dfg_check(log: &EventLog, dfg: &Dfg) -> Result<(), String> {
    let n = log.traces.len() as u64;
    let mut edge_cases: BTreeMap<(ActivityKind, ActivityKind), HashSet<i64>> = BTreeMap::new();
    let mut edge_secs: BTreeMap<(ActivityKind, ActivityKind), Vec<i64>> = BTreeMap::new();
    let mut node_cases: BTreeMap<ActivityKind, HashSet<i64>> = BTreeMap::new();
    let mut node_occ: BTreeMap<ActivityKind, u64> = BTreeMap::new();
    let mut start: BTreeMap<ActivityKind, u64> = BTreeMap::new();
    let mut end: BTreeMap<ActivityKind, u64> = BTreeMap::new();
    for (ci, t) in log.traces.iter().enumerate() {
        let ev = &t.events;
        for i in 0..ev.len() {
            node_cases.entry(ev[i].activity).or_default().insert(ci as i64);
            *node_occ.entry(ev[i].activity).or_default() += 1;
            if i + 1 < ev.len() {
                let key = (ev[i].activity, ev[i + 1].activity);
                edge_cases.entry(key).or_default().insert(ci as i64);
                edge_secs.entry(key).or_default().push(ev[i + 1].timestamp - ev[i].timestamp);
            }
        }
        if let Some(f) = ev.first() {
            *start.entry(f.activity).or_default() += 1;
        }
        if let Some(l) = ev.last() {
            *end.entry(l.activity).or_default() += 1;
        }
    }
    if dfg.case_count != n {
        return Err(format!("case count {} != {n}", dfg.case_count));
    }
    if dfg.edges.len() != edge_secs.len() {
        return Err(format!("{} edges, oracle {}", dfg.edges.len(), edge_secs.len()));
    }
    for (&(a, b), secs) in &edge_secs {
        let e = dfg.edge(a, b).ok_or(format!("missing edge {a} -> {b}"))?;
        let cases = edge_cases[&(a, b)].len() as u64;
        let want = (cases, pct(cases, n), secs.len() as u64, naive_median_minutes(secs));
        let got = (e.case_count, e.case_pct, e.occurrences, e.median_minutes);
        if want != got {
            return Err(format!("edge {a} -> {b}: got {got:?}, oracle {want:?}"));
        }
    }
    if dfg.nodes.len() != node_occ.len() {
        return Err(format!("{} nodes, oracle {}", dfg.nodes.len(), node_occ.len()));
    }
    for (&a, &occ) in &node_occ {
        let nd = dfg.node(a).ok_or(format!("missing node {a}"))?;
        let cases = node_cases[&a].len() as u64;
        let self_loop = edge_secs.get(&(a, a)).and_then(|s| naive_median_minutes(s));
        let want = (cases, pct(cases, n), occ, self_loop);
        let got = (nd.case_count, nd.case_pct, nd.occurrences, nd.median_self_loop_minutes);
        if want != got {
            return Err(format!("node {a}: got {got:?}, oracle {want:?}"));
        }
    }
    for (name, got, want) in [("start", &dfg.start, &start), ("end", &dfg.end, &end)] {
        let got: BTreeMap<ActivityKind, u64> = got.iter().map(|s| (s.activity, s.case_count)).collect();
        if &got != want {
            return Err(format!("{name} endpoints {got:?}, oracle {want:?}"));
        }
    }
    Ok(())
}

pub fn naive_path_check(log: &EventLog, from: ActivityKind, to: ActivityKind, got: &PathStats) -> Result<(), String> {
    let mut secs = Vec::new();
    let mut cases = 0u64;
    for t in &log.traces {
        let mut hit = false;
        for i in 1..t.events.len() {
            if t.events[i - 1].activity == from && t.events[i].activity == to {
                secs.push(t.events[i].timestamp - t.events[i - 1].timestamp);
                hit = true;
            }
        }
        cases += hit as u64;
    }
    let n = log.traces.len() as u64;
    let want = (cases, pct(cases, n), secs.len() as u64, naive_median_minutes(&secs));
    let have = (got.cases_with_path, got.case_coverage_pct, got.occurrences, got.median_minutes);
    if want != have {
        return Err(format!("path {from} -> {to}: got {have:?}, oracle {want:?}"));
    }
    Ok(())
}

/// Checks XML well-formedness and the log > trace > event nesting with an
/// independent pull parser. Returns the trace and event counts.
pub fn xes_structure(xml: &[u8]) -> Result<(usize, usize), String> {
    let mut reader = quick_xml::Reader::from_reader(xml);
    reader.config_mut().check_end_names = true;
    let mut buf = Vec::new();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let (mut logs, mut traces, mut events) = (0, 0, 0);
    loop {
        let ev = reader
            .read_event_into(&mut buf)
            .map_err(|e| format!("at {}: {e}", reader.buffer_position()))?;
        let (name, opens) = match &ev {
            XmlEvent::Start(e) => (e.name().as_ref().to_vec(), true),
            XmlEvent::Empty(e) => (e.name().as_ref().to_vec(), false),
            XmlEvent::End(_) => {
                stack.pop();
                buf.clear();
                continue;
            }
            XmlEvent::Eof => break,
            _ => {
                buf.clear();
                continue;
            }
        };
        let parent = stack.last().map(Vec::as_slice);
        let placed = match name.as_slice() {
            b"log" => {
                logs += 1;
                parent.is_none() && logs == 1
            }
            b"trace" => {
                traces += 1;
                parent == Some(b"log".as_slice())
            }
            b"event" => {
                events += 1;
                parent == Some(b"trace".as_slice())
            }
            _ => true,
        };
        if !placed {
            return Err(format!(
                "<{}> misplaced under {:?}",
                String::from_utf8_lossy(&name),
                parent.map(String::from_utf8_lossy)
            ));
        }
        if opens {
            stack.push(name);
        }
        buf.clear();
    }
    if !stack.is_empty() || logs != 1 {
        return Err("unclosed elements or no single <log>".into());
    }
    Ok((traces, events))
}

/// Mismatches between a quality report and the injected defects.
pub fn quality_vs_truth(report: &QualityReport, truth: &GroundTruth) -> Vec<String> {
    let mut bad = Vec::new();
    let sorted = |v: &[i64]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    let mut expect = |label: &str, kind: &str, needle: &str, ids: &[i64], applicable: Option<u64>| {
        match report.find(kind, needle) {
            None => bad.push(format!("{label}: no {kind} result for {needle:?}")),
            Some(r) => {
                if sorted(&r.affected_case_ids) != sorted(ids) {
                    bad.push(format!("{label}: {} affected, injected {}", r.affected, ids.len()));
                }
                if let Some(a) = applicable {
                    if r.applicable != a {
                        bad.push(format!("{label}: denominator {} != {a}", r.applicable));
                    }
                }
            }
        }
    };
    expect("missing acuity", "missing_value", "acuity", &truth.missing_acuity, Some(truth.valid_stays));
    expect("ADMITTED without hadm", "dependency", "\"ADMITTED\"", &truth.admitted_without_hadm, Some(truth.admitted_stays));
    expect("HOME with hadm", "dependency", "\"HOME\"", &truth.home_with_hadm, Some(truth.home_stays));
    expect("pain out of range", "range", "pain", &truth.pain_out_of_range, Some(truth.valid_stays));
    expect("Celsius temperature", "format", "Celsius", &truth.celsius_temperature, Some(truth.stays_with_temperature));
    expect("time anomaly", "time_anomaly", "", &[], Some(truth.valid_stays));
    expect("implausible temperature", "format", "implausible", &[], None);
    for attr in ["subject_id", "gender", "race", "arrival_transport", "disposition"] {
        expect(attr, "missing_value", attr, &[], None);
    }
    expect("incomplete", "incomplete_case", "", &[], None);
    if let Some(f) = &report.format {
        if f.temperature.celsius != truth.celsius_values {
            bad.push(format!("celsius values {} != {}", f.temperature.celsius, truth.celsius_values));
        }
    }
    bad
}

/// Per-trace event counts keyed by stay.
pub fn trace_sizes(log: &EventLog) -> HashMap<i64, u64> {
    log.traces.iter().map(|t| (t.case_id, t.events.len() as u64)).collect()
}

/// Triage one second after Enter, Enter first and Discharge last.
pub fn offset_violations(log: &EventLog) -> Vec<i64> {
    log.traces
        .iter()
        .filter(|t| {
            let ok_offset = match (t.first_of(ActivityKind::Triage), t.enter_time()) {
                (Some(tr), Some(en)) => tr.timestamp - en == 1,
                _ => false,
            };
            let ends = t.events.first().map(|e| e.activity) == Some(ActivityKind::Enter)
                && t.events.last().map(|e| e.activity) == Some(ActivityKind::Discharge);
            !(ok_offset && ends)
        })
        .map(|t| t.case_id)
        .collect()
}

// ---------------------------------------------------------------------------
// three-stay reference snippet

pub fn read_csv_table(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

/// Output projected onto the reference columns.
pub fn projected_three_stays() -> (Vec<String>, Vec<Vec<String>>) {
    let loaded = load_source_tables(&fixture("three_stays"), IngestOptions::default()).unwrap();
    let ex = extract_event_log(loaded.tables, &MappingConfig::default()).unwrap();
    let mut out = Vec::new();
    write_csv_to(&ex.log, &mut out, &CsvOptions::default()).unwrap();
    let (header, rows) = read_csv_table(&out);
    let expected = std::fs::read(fixture("three_stays_expected.csv")).unwrap();
    let (want_header, _) = read_csv_table(&expected);
    let idx: Vec<usize> = want_header
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap_or_else(|| panic!("no column {c}")))
        .collect();
    let rows = rows
        .into_iter()
        .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
        .collect();
    (want_header, rows)
}

