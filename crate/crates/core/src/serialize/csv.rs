//! Row-per-event CSV layout.
//!
//! Columns are `stay_id, subject_id, timestamp, activity`, then the mapped
//! case attributes, then the mapped event attributes, then any other
//! attribute names found in the log in name order. In the default sparse
//! layout a case attribute is printed only on the rows of the activity that
//! supplies it (`arrival_transport` on enter rows, `disposition` on
//! discharge rows, `acuity` on triage rows); `stay_id` and `subject_id` are
//! printed on every row.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::activity::ActivityKind;
use crate::config::{carrier_of, Carrier, MappingConfig};
use crate::error::{Error, Result};
use crate::log::{Event, EventLog, Trace};
use crate::time::{Timestamp, TimestampFormat};
use crate::value::{AttrKey, AttributeValue};

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub timestamp_format: TimestampFormat,
    /// Print every case attribute on every row.
    pub dense: bool,
    /// Decides column order and, when reading, which columns are case level.
    pub mapping: MappingConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Case(AttrKey),
    Event(AttrKey),
}

impl Column {
    fn key(self) -> AttrKey {
        match self {
            Column::Case(k) | Column::Event(k) => k,
        }
    }
}

fn attribute_columns(log: &EventLog, mapping: &MappingConfig) -> Vec<Column> {
    let mut cols: Vec<Column> = mapping
        .case_attributes
        .iter()
        .filter(|k| !matches!(**k, AttrKey::STAY_ID | AttrKey::SUBJECT_ID))
        .map(|k| Column::Case(*k))
        .collect();
    cols.extend(mapping.event_attributes.iter().map(|k| Column::Event(*k)));

    let mapped = |k: &AttrKey| {
        matches!(*k, AttrKey::STAY_ID | AttrKey::SUBJECT_ID)
            || mapping.is_case_attribute(*k)
            || mapping.is_event_attribute(*k)
    };
    let mut extra_case = BTreeSet::new();
    let mut extra_event = BTreeSet::new();
    for t in &log.traces {
        extra_case.extend(t.case_attributes.keys().filter(|k| !mapped(k)));
        for e in &t.events {
            extra_event.extend(e.attributes.keys().filter(|k| !mapped(k)));
        }
    }
    let mut extras: Vec<Column> = extra_case
        .iter()
        .map(|k| Column::Case(*k))
        .chain(
            extra_event
                .iter()
                .filter(|k| !extra_case.contains(*k))
                .map(|k| Column::Event(*k)),
        )
        .collect();
    extras.sort_by(|a, b| a.key().name().cmp(b.key().name()));
    cols.extend(extras);
    cols
}

/// Writes `log` to `path`; returns the number of data rows.
pub fn write_csv(log: &EventLog, path: &Path, options: &CsvOptions) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(log, BufWriter::with_capacity(1 << 20, file), options)
        .map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(
    log: &EventLog,
    out: W,
    options: &CsvOptions,
) -> std::io::Result<usize> {
    let columns = attribute_columns(log, &options.mapping);
    let mut w = csv::WriterBuilder::new()
        .buffer_capacity(1 << 16)
        .from_writer(out);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    };

    w.write_field("stay_id").map_err(csv_err)?;
    w.write_field("subject_id").map_err(csv_err)?;
    w.write_field("timestamp").map_err(csv_err)?;
    w.write_field("activity").map_err(csv_err)?;
    for c in &columns {
        w.write_field(c.key().name()).map_err(csv_err)?;
    }
    w.write_record(None::<&[u8]>).map_err(csv_err)?;

    let mut rows = 0;
    let mut cell: Vec<u8> = Vec::with_capacity(64);
    let mut stay_cell: Vec<u8> = Vec::with_capacity(16);
    let mut subject_cell: Vec<u8> = Vec::with_capacity(16);
    // for each case column, the row that prints it when its carrier is absent
    let mut fallback_row: Vec<bool> = Vec::with_capacity(columns.len());
    for trace in &log.traces {
        stay_cell.clear();
        write!(stay_cell, "{}", trace.case_id)?;
        subject_cell.clear();
        if let Some(v) = trace.case_attributes.get(AttrKey::SUBJECT_ID) {
            v.write_to(&mut subject_cell, options.timestamp_format)?;
        }
        fallback_row.clear();
        fallback_row.extend(columns.iter().map(|c| match *c {
            Column::Case(k) => match carrier_of(k) {
                Some(Carrier::Activity(a)) => !trace.contains(a),
                Some(Carrier::EveryRow) => false,
                None => true,
            },
            Column::Event(_) => false,
        }));

        for (i, event) in trace.events.iter().enumerate() {
            w.write_field(&stay_cell).map_err(csv_err)?;
            w.write_field(&subject_cell).map_err(csv_err)?;
            cell.clear();
            event.timestamp.write_to(&mut cell, options.timestamp_format)?;
            w.write_field(&cell).map_err(csv_err)?;
            w.write_field(event.activity.name()).map_err(csv_err)?;
            for (c, fallback) in columns.iter().zip(&fallback_row) {
                cell.clear();
                let value = match *c {
                    Column::Event(k) => event.attributes.get(k),
                    Column::Case(k) => {
                        let show = options.dense
                            || match carrier_of(k) {
                                Some(Carrier::EveryRow) => true,
                                Some(Carrier::Activity(a)) => {
                                    event.activity == a || (*fallback && i == 0)
                                }
                                None => i == 0,
                            };
                        if show {
                            trace.case_attributes.get(k)
                        } else {
                            None
                        }
                    }
                };
                if let Some(v) = value {
                    v.write_to(&mut cell, options.timestamp_format)?;
                }
                w.write_field(&cell).map_err(csv_err)?;
            }
            w.write_record(None::<&[u8]>).map_err(csv_err)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

/// Reads a file produced by [`write_csv`], in either layout and either
/// timestamp format.
///
/// Case attributes are rebuilt from the first non-empty cell of their column
/// within each stay. Columns outside the mapping are kept as event
/// attributes of text type.
pub fn read_csv(path: &Path, options: &CsvOptions) -> Result<EventLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, path, options)
}

pub fn read_csv_from<R: Read>(input: R, path: &Path, options: &CsvOptions) -> Result<EventLog> {
    let mut r = csv::ReaderBuilder::new()
        .buffer_capacity(1 << 20)
        .from_reader(input);
    let csv_error = |line: u64, message: String| Error::Csv {
        path: path.to_owned(),
        line,
        message,
    };
    let headers = r
        .byte_headers()
        .map_err(|e| csv_error(1, e.to_string()))?
        .clone();
    let position = |name: &str| headers.iter().position(|h| h == name.as_bytes());
    let (Some(stay_col), Some(time_col), Some(activity_col)) =
        (position("stay_id"), position("timestamp"), position("activity"))
    else {
        return Err(csv_error(
            1,
            "header must contain stay_id, timestamp and activity".into(),
        ));
    };

    let mapping = &options.mapping;
    let mut columns: Vec<Option<Column>> = Vec::with_capacity(headers.len());
    for (i, h) in headers.iter().enumerate() {
        if i == stay_col || i == time_col || i == activity_col {
            columns.push(None);
            continue;
        }
        let name = std::str::from_utf8(h)
            .map_err(|_| csv_error(1, format!("column {i} name is not UTF-8")))?;
        let key = AttrKey::new(name);
        let col = if key == AttrKey::SUBJECT_ID || mapping.is_case_attribute(key) {
            Column::Case(key)
        } else {
            if !mapping.is_event_attribute(key) {
                log::warn!(
                    "{}: column {name:?} is not in the mapping; kept as event attribute",
                    path.display()
                );
            }
            Column::Event(key)
        };
        columns.push(Some(col));
    }

    let mut traces: Vec<Trace> = Vec::new();
    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut record = csv::ByteRecord::new();
    let mut line: u64 = 1;
    loop {
        match r.read_byte_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let at = e.position().map_or(line + 1, |p| p.line());
                return Err(csv_error(at, e.to_string()));
            }
        }
        line = record.position().map_or(line + 1, |p| p.line());
        let field = |i: usize| -> Result<&str> {
            std::str::from_utf8(record.get(i).unwrap_or_default())
                .map_err(|_| csv_error(line, format!("column {i} is not UTF-8")))
        };
        let stay_id: i64 = field(stay_col)?
            .trim()
            .parse()
            .map_err(|_| csv_error(line, format!("bad stay_id {:?}", field(stay_col).unwrap_or(""))))?;
        let raw_time = field(time_col)?;
        let timestamp = Timestamp::parse(raw_time)
            .ok_or_else(|| csv_error(line, format!("bad timestamp {raw_time:?}")))?;
        let activity: ActivityKind = field(activity_col)?
            .parse()
            .map_err(|e: Error| csv_error(line, e.to_string()))?;

        let slot = *index.entry(stay_id).or_insert_with(|| {
            traces.push(Trace::new(stay_id));
            traces.len() - 1
        });
        let trace = &mut traces[slot];
        let mut event = Event::new(activity, timestamp);
        for (i, col) in columns.iter().enumerate() {
            let Some(col) = col else { continue };
            let raw = field(i)?;
            if raw.is_empty() {
                continue;
            }
            let key = col.key();
            let value = AttributeValue::typed(key.value_type(), raw);
            match col {
                Column::Case(_) => {
                    if !trace.case_attributes.contains(key) {
                        trace.case_attributes.insert(key, value);
                    }
                }
                Column::Event(_) => event.attributes.insert(key, value),
            }
        }
        trace.events.push(event);
    }
    for t in &mut traces {
        t.events.shrink_to_fit();
    }
    Ok(EventLog::new(traces))
}
