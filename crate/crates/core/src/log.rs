//! Event log data model and descriptive statistics.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::activity::ActivityKind;
use crate::error::{Error, Result};
use crate::source::StayId;
use crate::time::Timestamp;
use crate::value::{AttrKey, AttributeValue, Attributes};

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub activity: ActivityKind,
    pub timestamp: Timestamp,
    pub attributes: Attributes,
}

impl Event {
    pub fn new(activity: ActivityKind, timestamp: Timestamp) -> Self {
        Event {
            activity,
            timestamp,
            attributes: Attributes::new(),
        }
    }

    pub fn with(mut self, key: AttrKey, value: impl Into<AttributeValue>) -> Self {
        self.attributes.insert(key, value.into());
        self
    }

    fn sort_key(&self) -> (Timestamp, u8) {
        (self.timestamp, self.activity.priority())
    }
}

/// One ED stay.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub case_id: StayId,
    pub case_attributes: Attributes,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(case_id: StayId) -> Self {
        let mut case_attributes = Attributes::new();
        case_attributes.insert(AttrKey::STAY_ID, AttributeValue::Integer(case_id));
        Trace {
            case_id,
            case_attributes,
            events: Vec::new(),
        }
    }

    /// Looks the attribute up on the trace first, then on its events in order.
    pub fn attribute(&self, key: AttrKey) -> Option<&AttributeValue> {
        self.case_attributes.get(key).or_else(|| {
            self.events
                .iter()
                .find_map(|e| e.attributes.get(key))
        })
    }

    /// Every value of `key` on the trace and its events.
    pub fn attribute_values(&self, key: AttrKey) -> impl Iterator<Item = &AttributeValue> {
        self.case_attributes
            .get(key)
            .into_iter()
            .chain(self.events.iter().filter_map(move |e| e.attributes.get(key)))
    }

    pub fn subject_id(&self) -> Option<i64> {
        self.case_attributes.get(AttrKey::SUBJECT_ID)?.as_i64()
    }

    pub fn acuity(&self) -> Option<i64> {
        self.attribute(AttrKey::ACUITY)?.as_i64()
    }

    pub fn disposition(&self) -> Option<&str> {
        self.attribute(AttrKey::DISPOSITION)?.as_str()
    }

    pub fn first_of(&self, kind: ActivityKind) -> Option<&Event> {
        self.events.iter().find(|e| e.activity == kind)
    }

    pub fn contains(&self, kind: ActivityKind) -> bool {
        self.first_of(kind).is_some()
    }

    pub fn enter_time(&self) -> Option<Timestamp> {
        self.first_of(ActivityKind::Enter).map(|e| e.timestamp)
    }

    pub fn discharge_time(&self) -> Option<Timestamp> {
        self.first_of(ActivityKind::Discharge).map(|e| e.timestamp)
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key())
    }

    /// Stable sort by (timestamp, activity priority).
    pub fn sort_events(&mut self) {
        self.events.sort_by_key(Event::sort_key);
    }
}

/// Provenance carried alongside the traces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogMetadata {
    pub config_hash: Option<String>,
    pub first_timestamp: Option<Timestamp>,
    pub last_timestamp: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub metadata: LogMetadata,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Self {
        let mut log = EventLog {
            traces,
            metadata: LogMetadata::default(),
        };
        log.refresh_time_span();
        log
    }

    pub fn refresh_time_span(&mut self) {
        let times = self.traces.iter().flat_map(|t| t.events.iter().map(|e| e.timestamp));
        let (mut lo, mut hi) = (None::<Timestamp>, None::<Timestamp>);
        for ts in times {
            lo = Some(lo.map_or(ts, |l| l.min(ts)));
            hi = Some(hi.map_or(ts, |h| h.max(ts)));
        }
        self.metadata.first_timestamp = lo;
        self.metadata.last_timestamp = hi;
    }

    pub fn case_count(&self) -> usize {
        self.traces.len()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    /// Checks the structural invariants: unique case ids and sorted events.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.traces.len());
        for t in &self.traces {
            if !seen.insert(t.case_id) {
                return Err(Error::Data(format!("duplicate case id {}", t.case_id)));
            }
            if !t.is_sorted() {
                return Err(Error::Data(format!(
                    "events of case {} are not in timestamp order",
                    t.case_id
                )));
            }
        }
        Ok(())
    }

    /// Same traces, same order, same attribute values; metadata ignored.
    pub fn same_traces(&self, other: &EventLog) -> bool {
        self.traces == other.traces
    }

    /// Log holding exactly the traces that satisfy `predicate`, unmodified.
    pub fn sub_log(&self, predicate: impl Fn(&Trace) -> bool) -> EventLog {
        sub_log(self, predicate)
    }
}

pub fn sub_log(log: &EventLog, predicate: impl Fn(&Trace) -> bool) -> EventLog {
    EventLog {
        traces: log.traces.iter().filter(|t| predicate(t)).cloned().collect(),
        metadata: log.metadata.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventsPerCase {
    /// Exact mean is `total_events / cases`.
    pub total_events: u64,
    pub cases: u64,
    pub mean: f64,
    pub mean_rounded: u64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogStats {
    pub case_count: u64,
    pub patient_count: u64,
    pub event_count: u64,
    pub activity_type_count: u64,
    pub events_per_case: Option<EventsPerCase>,
}

pub fn log_statistics(log: &EventLog) -> LogStats {
    let patients: HashSet<i64> = log.traces.iter().filter_map(Trace::subject_id).collect();
    let mut kinds = [false; ActivityKind::ALL.len()];
    for e in log.traces.iter().flat_map(|t| &t.events) {
        kinds[e.activity.index()] = true;
    }
    let lengths = log.traces.iter().map(|t| t.events.len() as u64);
    let total: u64 = lengths.clone().sum();
    let cases = log.traces.len() as u64;
    let events_per_case = (cases > 0).then(|| EventsPerCase {
        total_events: total,
        cases,
        mean: total as f64 / cases as f64,
        // round half up on the exact rational
        mean_rounded: (2 * total + cases) / (2 * cases),
        min: lengths.clone().min().unwrap_or(0),
        max: lengths.max().unwrap_or(0),
    });
    LogStats {
        case_count: cases,
        patient_count: patients.len() as u64,
        event_count: total,
        activity_type_count: kinds.iter().filter(|k| **k).count() as u64,
        events_per_case,
    }
}

impl std::fmt::Display for LogStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "# Cases (stay_id)         {}", self.case_count)?;
        writeln!(f, "# Patients (subject_id)   {}", self.patient_count)?;
        writeln!(f, "# Events                  {}", self.event_count)?;
        writeln!(f, "# Activity types          {}", self.activity_type_count)?;
        match &self.events_per_case {
            Some(e) => {
                writeln!(f, "Avg. # events per case    {} ({:.4})", e.mean_rounded, e.mean)?;
                writeln!(f, "Min. # events per case    {}", e.min)?;
                write!(f, "Max. # events per case    {}", e.max)
            }
            None => write!(f, "# events per case         n/a"),
        }
    }
}
