//! Turns cleaned source tables into an event log: one trace per ED stay,
//! with activities derived from the tables' time columns.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;

use crate::activity::ActivityKind;
use crate::config::MappingConfig;
use crate::error::Result;
use crate::log::{Event, EventLog, LogMetadata, Trace};
use crate::source::{
    check_referential_integrity, stay_index, DiagnosisRecord, IntegrityReport, OrphanRow,
    Reading, SourceTables, StayId, Table, Vitals,
};
use crate::time::Timestamp;
use crate::value::{AttrKey, AttributeValue, Attributes, Decimal};

/// Table and row an event was derived from; last component of the sort key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceRow {
    pub table: Table,
    pub row: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub stay_id: StayId,
    pub event: Event,
    pub source_row: SourceRow,
}

impl RawEvent {
    fn sort_key(&self) -> (StayId, Timestamp, u8, SourceRow) {
        (
            self.stay_id,
            self.event.timestamp,
            self.event.activity.priority(),
            self.source_row,
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct DerivedEvents {
    pub events: Vec<RawEvent>,
    /// Child rows whose stay is missing from `edstays`; they yield no events.
    pub orphans: IntegrityReport,
    /// Stays that received an attribute-less triage event because the triage
    /// table has no row for them.
    pub stays_without_triage: Vec<StayId>,
}

/// Drops stays whose discharge does not come strictly after entry, together
/// with every child row of those stays. Returns the dropped stay ids.
pub fn clean_invalid_stays(mut tables: SourceTables) -> (SourceTables, Vec<StayId>) {
    let mut rejected = Vec::new();
    tables.edstays.retain(|s| {
        let ok = s.outtime > s.intime;
        if !ok {
            rejected.push(s.stay_id);
        }
        ok
    });
    if !rejected.is_empty() {
        let gone: HashSet<StayId> = rejected.iter().copied().collect();
        tables.triage.retain(|r| !gone.contains(&r.stay_id));
        tables.vitalsign.retain(|r| !gone.contains(&r.stay_id));
        tables.medrecon.retain(|r| !gone.contains(&r.stay_id));
        tables.pyxis.retain(|r| !gone.contains(&r.stay_id));
        tables.diagnosis.retain(|r| !gone.contains(&r.stay_id));
    }
    (tables, rejected)
}

pub fn synthesize_triage_timestamp(intime: Timestamp, config: &MappingConfig) -> Timestamp {
    intime + config.triage_offset_seconds
}

/// Shares one allocation per distinct text value.
#[derive(Default)]
struct TextPool(HashSet<Arc<str>>);

impl TextPool {
    fn get(&mut self, s: &str) -> Arc<str> {
        if let Some(a) = self.0.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.0.insert(a.clone());
        a
    }
}

/// Collects the attributes of one event, keeping only mapped names.
struct AttrSink<'a> {
    mapped: &'a [bool],
    pool: &'a mut TextPool,
    buf: Vec<(AttrKey, AttributeValue)>,
}

impl<'a> AttrSink<'a> {
    fn wants(&self, key: AttrKey) -> bool {
        self.mapped.get(index_of(key)).copied().unwrap_or(false)
    }

    fn put(&mut self, key: AttrKey, value: AttributeValue) {
        if self.wants(key) && value != AttributeValue::Absent {
            self.buf.push((key, value));
        }
    }

    fn text(&mut self, key: AttrKey, v: Option<&str>) {
        if let Some(s) = v {
            if self.wants(key) && !s.is_empty() {
                let a = self.pool.get(s);
                self.buf.push((key, AttributeValue::Text(a)));
            }
        }
    }

    fn int(&mut self, key: AttrKey, v: i64) {
        self.put(key, AttributeValue::Integer(v));
    }

    fn reading_int(&mut self, key: AttrKey, v: &Option<Reading<i64>>) {
        match v {
            Some(Reading::Value(i)) => self.put(key, AttributeValue::Integer(*i)),
            Some(Reading::Unparsed(s)) if self.wants(key) => {
                let a = self.pool.get(s);
                self.buf.push((key, AttributeValue::AbsentRaw(a)));
            }
            _ => {}
        }
    }

    fn reading_dec(&mut self, key: AttrKey, v: &Option<Reading<Decimal>>) {
        match v {
            Some(Reading::Value(d)) => self.put(key, AttributeValue::Decimal(*d)),
            Some(Reading::Unparsed(s)) if self.wants(key) => {
                let a = self.pool.get(s);
                self.buf.push((key, AttributeValue::AbsentRaw(a)));
            }
            _ => {}
        }
    }

    fn vitals(&mut self, v: &Vitals) {
        self.reading_dec(AttrKey::TEMPERATURE, &v.temperature);
        self.reading_dec(AttrKey::HEARTRATE, &v.heartrate);
        self.reading_dec(AttrKey::RESPRATE, &v.resprate);
        self.reading_dec(AttrKey::O2SAT, &v.o2sat);
        self.reading_dec(AttrKey::SBP, &v.sbp);
        self.reading_dec(AttrKey::DBP, &v.dbp);
        self.text(AttrKey::PAIN, v.pain.as_deref());
    }

    fn diagnosis(&mut self, d: &DiagnosisRecord) {
        self.int(AttrKey::SEQ_NUM, d.seq_num);
        self.text(AttrKey::ICD_CODE, Some(&d.icd_code));
        self.int(AttrKey::ICD_VERSION, d.icd_version);
        self.text(AttrKey::ICD_TITLE, Some(&d.icd_title));
    }

    fn take(&mut self) -> Attributes {
        let mut a: Attributes = self.buf.drain(..).collect();
        a.shrink_to_fit();
        a
    }
}

fn index_of(key: AttrKey) -> usize {
    key.index()
}

fn mapped_mask(config: &MappingConfig) -> Vec<bool> {
    AttrKey::all_known()
        .map(|k| config.is_case_attribute(k) || config.is_event_attribute(k))
        .collect()
}

/// Derives timestamped activity events from cleaned tables.
///
/// Per stay: an enter event at `intime`, a triage event at
/// `intime + triage_offset`, and a discharge at `outtime` (one per diagnosis
/// row when replication is on). Each vitalsign, medrecon and pyxis row
/// yields one event at its `charttime`.
pub fn derive_activity_events(tables: &SourceTables, config: &MappingConfig) -> DerivedEvents {
    into_activity_events(tables.clone(), config)
}

/// Consuming form of [`derive_activity_events`]; source rows are released
/// table by table as they are converted.
pub fn into_activity_events(tables: SourceTables, config: &MappingConfig) -> DerivedEvents {
    let orphans = check_referential_integrity(&tables);
    let is_orphan = |table: Table| -> HashSet<usize> {
        orphans
            .orphans
            .get(&table)
            .map(|v| v.iter().map(|o: &OrphanRow| o.row).collect())
            .unwrap_or_default()
    };
    let index = stay_index(&tables);
    let mask = mapped_mask(config);
    let mut pool = TextPool::default();
    let mut sink = AttrSink {
        mapped: &mask,
        pool: &mut pool,
        buf: Vec::with_capacity(16),
    };

    let SourceTables {
        edstays,
        triage,
        vitalsign,
        medrecon,
        pyxis,
        diagnosis,
    } = tables;

    let expected = 2 * edstays.len()
        + vitalsign.len()
        + medrecon.len()
        + pyxis.len()
        + diagnosis.len().max(edstays.len());
    let mut events = Vec::with_capacity(expected);

    // triage rows by stay position
    let mut triage_of: Vec<Option<Attributes>> = vec![None; edstays.len()];
    let skip = is_orphan(Table::Triage);
    for (i, r) in triage.into_iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        sink.vitals(&r.vitals);
        sink.reading_int(AttrKey::ACUITY, &r.acuity);
        sink.text(AttrKey::CHIEFCOMPLAINT, r.chiefcomplaint.as_deref());
        triage_of[index[&r.stay_id]] = Some(sink.take());
    }

    // diagnosis rows grouped by stay position, in table order
    let mut diagnoses_of: Vec<Vec<(u32, DiagnosisRecord)>> = vec![Vec::new(); edstays.len()];
    let skip = is_orphan(Table::Diagnosis);
    for (i, d) in diagnosis.into_iter().enumerate() {
        if !skip.contains(&i) {
            diagnoses_of[index[&d.stay_id]].push((i as u32, d));
        }
    }

    let mut stays_without_triage = Vec::new();
    for (i, (stay, (triage_attrs, diagnoses))) in edstays
        .into_iter()
        .zip(triage_of.into_iter().zip(diagnoses_of))
        .enumerate()
    {
        let row = SourceRow {
            table: Table::Edstays,
            row: i as u32,
        };
        sink.int(AttrKey::STAY_ID, stay.stay_id);
        sink.int(AttrKey::SUBJECT_ID, stay.subject_id);
        sink.reading_int(AttrKey::HADM_ID, &stay.hadm_id);
        sink.text(AttrKey::GENDER, stay.gender.as_deref());
        sink.text(AttrKey::RACE, stay.race.as_deref());
        sink.text(AttrKey::ARRIVAL_TRANSPORT, stay.arrival_transport.as_deref());
        events.push(RawEvent {
            stay_id: stay.stay_id,
            event: Event {
                activity: ActivityKind::Enter,
                timestamp: stay.intime,
                attributes: sink.take(),
            },
            source_row: row,
        });

        let triage_attrs = triage_attrs.unwrap_or_else(|| {
            stays_without_triage.push(stay.stay_id);
            Attributes::new()
        });
        events.push(RawEvent {
            stay_id: stay.stay_id,
            event: Event {
                activity: ActivityKind::Triage,
                timestamp: synthesize_triage_timestamp(stay.intime, config),
                attributes: triage_attrs,
            },
            source_row: row,
        });

        if config.discharge_replication && !diagnoses.is_empty() {
            for (drow, d) in diagnoses {
                sink.text(AttrKey::DISPOSITION, stay.disposition.as_deref());
                sink.diagnosis(&d);
                events.push(RawEvent {
                    stay_id: stay.stay_id,
                    event: Event {
                        activity: ActivityKind::Discharge,
                        timestamp: stay.outtime,
                        attributes: sink.take(),
                    },
                    source_row: SourceRow {
                        table: Table::Diagnosis,
                        row: drow,
                    },
                });
            }
        } else {
            sink.text(AttrKey::DISPOSITION, stay.disposition.as_deref());
            events.push(RawEvent {
                stay_id: stay.stay_id,
                event: Event {
                    activity: ActivityKind::Discharge,
                    timestamp: stay.outtime,
                    attributes: sink.take(),
                },
                source_row: row,
            });
        }
    }

    let skip = is_orphan(Table::Vitalsign);
    for (i, r) in vitalsign.into_iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        sink.vitals(&r.vitals);
        sink.text(AttrKey::RHYTHM, r.rhythm.as_deref());
        events.push(RawEvent {
            stay_id: r.stay_id,
            event: Event {
                activity: ActivityKind::VitalSignCheck,
                timestamp: r.charttime,
                attributes: sink.take(),
            },
            source_row: SourceRow {
                table: Table::Vitalsign,
                row: i as u32,
            },
        });
    }

    let skip = is_orphan(Table::Medrecon);
    for (i, r) in medrecon.into_iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        sink.text(AttrKey::NAME, Some(&r.name));
        sink.text(AttrKey::GSN, r.gsn.as_deref());
        sink.text(AttrKey::NDC, r.ndc.as_deref());
        sink.int(AttrKey::ETC_RN, r.etc_rn);
        sink.text(AttrKey::ETCCODE, r.etccode.as_deref());
        sink.text(AttrKey::ETCDESCRIPTION, r.etcdescription.as_deref());
        events.push(RawEvent {
            stay_id: r.stay_id,
            event: Event {
                activity: ActivityKind::MedicineReconciliation,
                timestamp: r.charttime,
                attributes: sink.take(),
            },
            source_row: SourceRow {
                table: Table::Medrecon,
                row: i as u32,
            },
        });
    }

    let skip = is_orphan(Table::Pyxis);
    for (i, r) in pyxis.into_iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        sink.int(AttrKey::MED_RN, r.med_rn);
        sink.text(AttrKey::NAME, Some(&r.name));
        sink.int(AttrKey::GSN_RN, r.gsn_rn);
        sink.text(AttrKey::GSN, r.gsn.as_deref());
        events.push(RawEvent {
            stay_id: r.stay_id,
            event: Event {
                activity: ActivityKind::MedicineDispensation,
                timestamp: r.charttime,
                attributes: sink.take(),
            },
            source_row: SourceRow {
                table: Table::Pyxis,
                row: i as u32,
            },
        });
    }

    DerivedEvents {
        events,
        orphans,
        stays_without_triage,
    }
}

/// Groups raw events into traces, orders each trace by
/// (timestamp, activity priority, source row), and lifts case attributes
/// from their carrier events onto the trace.
///
/// Traces are ordered by (subject_id, first event time, stay_id).
pub fn assemble_event_log(mut events: Vec<RawEvent>, config: &MappingConfig) -> EventLog {
    events.sort_unstable_by_key(RawEvent::sort_key);
    let case_mask: Vec<bool> = AttrKey::all_known()
        .map(|k| config.is_case_attribute(k))
        .collect();
    let is_case = |k: AttrKey| case_mask.get(index_of(k)).copied().unwrap_or(false);

    let mut traces: Vec<Trace> = Vec::new();
    let mut current: Option<Trace> = None;
    for raw in events {
        if current.as_ref().is_some_and(|t| t.case_id != raw.stay_id) {
            traces.push(finish(current.take().expect("checked")));
        }
        let trace = current.get_or_insert_with(|| Trace::new(raw.stay_id));
        let mut event = raw.event;
        if event.attributes.keys().any(is_case) {
            let mut kept = Attributes::new();
            for (k, v) in event.attributes.iter() {
                if is_case(k) {
                    if !trace.case_attributes.contains(k) {
                        trace.case_attributes.insert(k, v.clone());
                    }
                } else {
                    kept.insert(k, v.clone());
                }
            }
            kept.shrink_to_fit();
            event.attributes = kept;
        }
        trace.events.push(event);
    }
    if let Some(t) = current {
        traces.push(finish(t));
    }
    traces.sort_by_key(|t| {
        (
            t.subject_id(),
            t.events.first().map(|e| e.timestamp),
            t.case_id,
        )
    });
    let mut log = EventLog {
        traces,
        metadata: LogMetadata {
            config_hash: Some(config.hash()),
            ..Default::default()
        },
    };
    log.refresh_time_span();
    log
}

fn finish(mut t: Trace) -> Trace {
    t.events.shrink_to_fit();
    t
}

#[derive(Debug, Clone)]
pub struct PreArrivalFilter {
    pub log: EventLog,
    pub removed: usize,
    /// Traces left untouched because they have no enter event.
    pub traces_without_enter: Vec<StayId>,
}

/// Removes vital-sign, reconciliation and dispensation events at or before
/// the trace's enter time. Enter, triage and discharge events are kept.
pub fn filter_pre_arrival_events(mut log: EventLog) -> PreArrivalFilter {
    let mut removed = 0;
    let mut traces_without_enter = Vec::new();
    for trace in &mut log.traces {
        let Some(enter) = trace.enter_time() else {
            traces_without_enter.push(trace.case_id);
            continue;
        };
        let before = trace.events.len();
        trace
            .events
            .retain(|e| !(e.activity.is_optional() && e.timestamp <= enter));
        removed += before - trace.events.len();
    }
    log.refresh_time_span();
    PreArrivalFilter {
        log,
        removed,
        traces_without_enter,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionSummary {
    pub rejected_stays: Vec<StayId>,
    pub orphan_rows: usize,
    pub stays_without_triage: usize,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub log: EventLog,
    pub rejected_stays: Vec<StayId>,
    pub orphans: IntegrityReport,
    pub stays_without_triage: Vec<StayId>,
}

impl Extraction {
    pub fn summary(&self) -> ExtractionSummary {
        ExtractionSummary {
            rejected_stays: self.rejected_stays.clone(),
            orphan_rows: self.orphans.total_orphans(),
            stays_without_triage: self.stays_without_triage.len(),
        }
    }
}

/// clean → derive → assemble.
pub fn extract_event_log(tables: SourceTables, config: &MappingConfig) -> Result<Extraction> {
    config.validate()?;
    let (tables, rejected_stays) = clean_invalid_stays(tables);
    let derived = into_activity_events(tables, config);
    let log = assemble_event_log(derived.events, config);
    Ok(Extraction {
        log,
        rejected_stays,
        orphans: derived.orphans,
        stays_without_triage: derived.stays_without_triage,
    })
}

/// Events per stay expected from the extraction rules, keyed by stay.
pub fn expected_event_counts(tables: &SourceTables, config: &MappingConfig) -> HashMap<StayId, usize> {
    let mut counts: HashMap<StayId, [usize; 4]> = tables
        .edstays
        .iter()
        .map(|s| (s.stay_id, [0; 4]))
        .collect();
    let mut bump = |id: StayId, slot: usize| {
        if let Some(c) = counts.get_mut(&id) {
            c[slot] += 1;
        }
    };
    tables.vitalsign.iter().for_each(|r| bump(r.stay_id, 0));
    tables.medrecon.iter().for_each(|r| bump(r.stay_id, 1));
    tables.pyxis.iter().for_each(|r| bump(r.stay_id, 2));
    tables.diagnosis.iter().for_each(|r| bump(r.stay_id, 3));
    counts
        .into_iter()
        .map(|(id, [v, m, p, d])| {
            let discharges = if config.discharge_replication { d.max(1) } else { 1 };
            (id, 2 + v + m + p + discharges)
        })
        .collect()
}
