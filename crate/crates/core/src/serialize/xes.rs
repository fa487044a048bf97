//! XES 1.0 writer and reader.
//!
//! Case attributes become trace attributes; every event carries
//! `concept:name` (the activity) and `time:timestamp`. Decimal values are
//! written as `float`, integers as `int`, everything else as `string`.
//! Absent values produce no element.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use crate::activity::ActivityKind;
use crate::error::{Error, Result};
use crate::log::{Event, EventLog, Trace};
use crate::time::{Timestamp, TimestampFormat};
use crate::value::{AttrKey, AttributeValue, Attributes, Decimal, ValueType};

const HEADER: &str = r#"<?xml version="1.0" encoding="UTF-8" ?>
<log xes.version="1.0" xes.features="nested-attributes" openxes.version="1.0RC7" xmlns="http://www.xes-standard.org/">
	<extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>
	<extension name="Time" prefix="time" uri="http://www.xes-standard.org/time.xesext"/>
	<classifier name="Activity" keys="concept:name"/>
"#;

/// Writes `log` to `path`; returns the number of traces.
pub fn write_xes(log: &EventLog, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_xes_to(log, BufWriter::with_capacity(1 << 20, file)).map_err(|e| Error::io(path, e))
}

pub fn write_xes_to<W: Write>(log: &EventLog, mut w: W) -> std::io::Result<usize> {
    w.write_all(HEADER.as_bytes())?;
    for trace in &log.traces {
        w.write_all(b"\t<trace>\n")?;
        writeln!(w, "\t\t<string key=\"concept:name\" value=\"{}\"/>", trace.case_id)?;
        write_attributes(&mut w, &trace.case_attributes, "\t\t")?;
        for event in &trace.events {
            w.write_all(b"\t\t<event>\n\t\t\t<string key=\"concept:name\" value=\"")?;
            w.write_all(event.activity.name().as_bytes())?;
            w.write_all(b"\"/>\n\t\t\t<date key=\"time:timestamp\" value=\"")?;
            event.timestamp.write_xes(&mut w)?;
            w.write_all(b"\"/>\n")?;
            write_attributes(&mut w, &event.attributes, "\t\t\t")?;
            w.write_all(b"\t\t</event>\n")?;
        }
        w.write_all(b"\t</trace>\n")?;
    }
    w.write_all(b"</log>\n")?;
    w.flush()?;
    Ok(log.traces.len())
}

/// Markup characters plus the whitespace that parsers would otherwise
/// normalize to spaces inside attribute values.
fn write_escaped<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    let e = escape(s);
    if !e.contains(['\n', '\r', '\t']) {
        return w.write_all(e.as_bytes());
    }
    for c in e.chars() {
        match c {
            '\n' => w.write_all(b"&#10;")?,
            '\r' => w.write_all(b"&#13;")?,
            '\t' => w.write_all(b"&#9;")?,
            c => write!(w, "{c}")?,
        }
    }
    Ok(())
}

fn write_attributes<W: Write>(w: &mut W, attrs: &Attributes, indent: &str) -> std::io::Result<()> {
    for (key, value) in attrs.iter() {
        let tag = match value {
            AttributeValue::Integer(_) => "int",
            AttributeValue::Decimal(_) => "float",
            AttributeValue::Timestamp(_) => "date",
            AttributeValue::Text(_) | AttributeValue::AbsentRaw(_) => "string",
            AttributeValue::Absent => continue,
        };
        write!(w, "{indent}<{tag} key=\"{}\" value=\"", escape(key.name()))?;
        match value {
            AttributeValue::Text(s) | AttributeValue::AbsentRaw(s) => {
                write_escaped(w, s)?
            }
            AttributeValue::Timestamp(t) => t.write_xes(w)?,
            other => other.write_to(w, TimestampFormat::Iso)?,
        }
        w.write_all(b"\"/>\n")?;
    }
    Ok(())
}

pub fn read_xes(path: &Path) -> Result<EventLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_xes_from(BufReader::with_capacity(1 << 20, file), path)
}

#[derive(PartialEq)]
enum Scope {
    Outside,
    Log,
    Trace,
    Event,
}

/// Parses XES from `input`. Any syntax error, misplaced element or early end
/// of input fails the whole read.
pub fn read_xes_from<R: BufRead>(input: R, path: &Path) -> Result<EventLog> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::with_capacity(1024);
    let mut scope = Scope::Outside;
    let mut saw_log = false;
    let mut traces: Vec<Trace> = Vec::new();
    let mut trace_attrs = Attributes::new();
    let mut trace_name: Option<String> = None;
    let mut events: Vec<Event> = Vec::new();
    let mut activity: Option<ActivityKind> = None;
    let mut timestamp: Option<Timestamp> = None;
    let mut event_attrs = Attributes::new();
    // nesting depth of elements we do not interpret (nested attributes, globals)
    let mut skip_depth = 0usize;

    loop {
        buf.clear();
        let ev = reader.read_event_into(&mut buf);
        let pos = reader.buffer_position();
        let fail = |element: Option<&[u8]>, message: String| Error::Xml {
            path: path.to_owned(),
            position: pos,
            element: element.map(|e| String::from_utf8_lossy(e).into_owned()),
            message,
        };
        let ev = match ev {
            Ok(ev) => ev,
            Err(e) => {
                return Err(Error::Xml {
                    path: path.to_owned(),
                    position: reader.error_position(),
                    element: None,
                    message: e.to_string(),
                })
            }
        };
        match ev {
            XmlEvent::Start(ref e) | XmlEvent::Empty(ref e) => {
                let empty = matches!(ev, XmlEvent::Empty(_));
                let name = e.name();
                let name = name.as_ref();
                if skip_depth > 0 {
                    if !empty {
                        skip_depth += 1;
                    }
                    continue;
                }
                match (&scope, name) {
                    (Scope::Outside, b"log") => {
                        saw_log = true;
                        scope = Scope::Log;
                        if empty {
                            scope = Scope::Outside;
                        }
                    }
                    (Scope::Log, b"trace") => {
                        trace_attrs = Attributes::new();
                        trace_name = None;
                        events = Vec::new();
                        scope = Scope::Trace;
                        if empty {
                            return Err(fail(Some(name), "trace without case id".into()));
                        }
                    }
                    (Scope::Trace, b"event") => {
                        activity = None;
                        timestamp = None;
                        event_attrs = Attributes::new();
                        scope = Scope::Event;
                        if empty {
                            return Err(fail(Some(name), "event without concept:name".into()));
                        }
                    }
                    (Scope::Log, _) => {
                        if !empty {
                            skip_depth = 1;
                        }
                    }
                    (Scope::Trace | Scope::Event, _)
                        if !matches!(name, b"string" | b"int" | b"float" | b"date" | b"boolean" | b"id") =>
                    {
                        if !empty {
                            skip_depth = 1;
                        }
                    }
                    (Scope::Trace | Scope::Event, _) => {
                        let (key, raw) = key_value(e).map_err(|m| fail(Some(name), m))?;
                        if !empty {
                            skip_depth = 1;
                        }
                        if scope == Scope::Trace {
                            if key == "concept:name" {
                                trace_name = Some(raw);
                            } else {
                                let v = typed(name, &key, &raw).map_err(|m| fail(Some(name), m))?;
                                trace_attrs.insert(AttrKey::new(&key), v);
                            }
                        } else if key == "concept:name" {
                            activity = Some(raw.parse().map_err(|e: Error| fail(Some(name), e.to_string()))?);
                        } else if key == "time:timestamp" {
                            timestamp = Some(
                                Timestamp::parse_xes(&raw)
                                    .ok_or_else(|| fail(Some(name), format!("bad date {raw:?}")))?,
                            );
                        } else {
                            let v = typed(name, &key, &raw).map_err(|m| fail(Some(name), m))?;
                            event_attrs.insert(AttrKey::new(&key), v);
                        }
                    }
                    (Scope::Outside, _) => {
                        return Err(fail(Some(name), "expected <log> root element".into()))
                    }
                }
            }
            XmlEvent::End(ref e) => {
                if skip_depth > 0 {
                    skip_depth -= 1;
                    continue;
                }
                let name = e.name();
                let name = name.as_ref();
                match (&scope, name) {
                    (Scope::Event, b"event") => {
                        let (Some(a), Some(t)) = (activity.take(), timestamp.take()) else {
                            return Err(fail(
                                Some(name),
                                "event needs concept:name and time:timestamp".into(),
                            ));
                        };
                        let mut attrs = std::mem::take(&mut event_attrs);
                        attrs.shrink_to_fit();
                        events.push(Event {
                            activity: a,
                            timestamp: t,
                            attributes: attrs,
                        });
                        scope = Scope::Trace;
                    }
                    (Scope::Trace, b"trace") => {
                        let case_id = match trace_attrs.get(AttrKey::STAY_ID) {
                            Some(AttributeValue::Integer(i)) => *i,
                            _ => trace_name
                                .as_deref()
                                .and_then(|n| n.parse().ok())
                                .ok_or_else(|| fail(Some(name), "trace without integer stay_id".into()))?,
                        };
                        let mut trace = Trace::new(case_id);
                        for (k, v) in trace_attrs.iter() {
                            trace.case_attributes.insert(k, v.clone());
                        }
                        trace.events = std::mem::take(&mut events);
                        trace.events.shrink_to_fit();
                        traces.push(trace);
                        scope = Scope::Log;
                    }
                    (Scope::Log, b"log") => scope = Scope::Outside,
                    _ => return Err(fail(Some(name), "unexpected closing tag".into())),
                }
            }
            XmlEvent::Eof => {
                if scope != Scope::Outside || skip_depth > 0 {
                    return Err(fail(None, "unexpected end of input".into()));
                }
                if !saw_log {
                    return Err(fail(None, "no <log> element".into()));
                }
                break;
            }
            _ => {}
        }
    }
    Ok(EventLog::new(traces))
}

fn key_value(e: &BytesStart<'_>) -> std::result::Result<(String, String), String> {
    let mut key = None;
    let mut value = None;
    for a in e.attributes() {
        let a = a.map_err(|e| e.to_string())?;
        match a.key.as_ref() {
            b"key" => key = Some(a.unescape_value().map_err(|e| e.to_string())?.into_owned()),
            b"value" => value = Some(a.unescape_value().map_err(|e| e.to_string())?.into_owned()),
            _ => {}
        }
    }
    match (key, value) {
        (Some(k), Some(v)) => Ok((k, v)),
        (None, _) => Err("attribute element without key".into()),
        (Some(k), None) => Err(format!("attribute {k:?} without value")),
    }
}

fn typed(tag: &[u8], key: &str, raw: &str) -> std::result::Result<AttributeValue, String> {
    Ok(match tag {
        b"int" => AttributeValue::Integer(raw.parse().map_err(|_| format!("bad int {raw:?} for {key}"))?),
        b"float" => AttributeValue::Decimal(
            raw.parse::<Decimal>()
                .map_err(|_| format!("bad float {raw:?} for {key}"))?,
        ),
        b"date" => AttributeValue::Timestamp(
            Timestamp::parse_xes(raw).ok_or_else(|| format!("bad date {raw:?} for {key}"))?,
        ),
        // strings under a numeric schema column were unparsable in the source
        _ => match AttrKey::known(key).map(AttrKey::value_type) {
            Some(ValueType::Integer | ValueType::Decimal) => AttributeValue::typed(
                AttrKey::new(key).value_type(),
                raw,
            ),
            _ if raw.is_empty() => AttributeValue::Absent,
            _ => AttributeValue::text(raw),
        },
    })
}
