//! Zone-free wall-clock timestamps at second resolution.
//!
//! Source data is date-shifted, so no timezone is attached anywhere; all
//! comparisons are on the naive value.

use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Sub};

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SECS_PER_DAY: i64 = 86_400;
/// Days from 0001-01-01 (CE day 1) to 1970-01-01.
const UNIX_EPOCH_DAYS_FROM_CE: i64 = 719_163;

/// Seconds since 1970-01-01 00:00:00, without timezone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

/// Textual layout used when printing timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampFormat {
    /// `DD.MM.YYYY HH:MM:SS`
    #[default]
    Dotted,
    /// `YYYY-MM-DD HH:MM:SS`
    Iso,
}

impl Timestamp {
    pub const fn from_seconds(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn seconds(self) -> i64 {
        self.0
    }

    pub fn from_ymd_hms(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> Option<Self> {
        if h > 23 || mi > 59 || s > 59 {
            return None;
        }
        let date = NaiveDate::from_ymd_opt(y, mo, d)?;
        let days = date.num_days_from_ce() as i64 - UNIX_EPOCH_DAYS_FROM_CE;
        Some(Timestamp(
            days * SECS_PER_DAY + (h * 3600 + mi * 60 + s) as i64,
        ))
    }

    /// Parses `YYYY-MM-DD HH:MM[:SS]` (a `T` separator is also accepted) or
    /// the dotted `DD.MM.YYYY HH:MM[:SS]` form. Missing seconds mean `:00`.
    pub fn parse(text: &str) -> Option<Self> {
        let b = text.trim().as_bytes();
        if b.len() < 16 {
            return None;
        }
        let (y, mo, d, rest) = if b[4] == b'-' && b[7] == b'-' {
            (digits(&b[0..4])?, digits(&b[5..7])?, digits(&b[8..10])?, &b[10..])
        } else if b[2] == b'.' && b[5] == b'.' {
            (digits(&b[6..10])?, digits(&b[3..5])?, digits(&b[0..2])?, &b[10..])
        } else {
            return None;
        };
        if rest[0] != b' ' && rest[0] != b'T' {
            return None;
        }
        let time = &rest[1..];
        if time.len() < 5 || time[2] != b':' {
            return None;
        }
        let h = digits(&time[0..2])?;
        let mi = digits(&time[3..5])?;
        let s = match time.len() {
            5 => 0,
            8 if time[5] == b':' => digits(&time[6..8])?,
            // tolerate a trailing fractional part of zeros, e.g. ":00.000"
            n if n > 9 && time[5] == b':' && time[8] == b'.' => {
                if !time[9..].iter().all(|c| *c == b'0') {
                    return None;
                }
                digits(&time[6..8])?
            }
            _ => return None,
        };
        Self::from_ymd_hms(y as i32, mo, d, h, mi, s)
    }

    /// Parses an XES date value: RFC 3339 with offset (normalized to UTC),
    /// or a zone-less ISO form.
    pub fn parse_xes(text: &str) -> Option<Self> {
        if let Ok(dt) = DateTime::parse_from_rfc3339(text.trim()) {
            return Some(Self::from_naive(dt.naive_utc()));
        }
        Self::parse(text)
    }

    pub fn from_naive(dt: NaiveDateTime) -> Self {
        Timestamp(dt.and_utc().timestamp())
    }

    pub fn to_naive(self) -> NaiveDateTime {
        DateTime::from_timestamp(self.0, 0)
            .expect("timestamp within chrono range")
            .naive_utc()
    }

    pub fn second_of_minute(self) -> u32 {
        self.0.rem_euclid(60) as u32
    }

    /// Rounds down to the start of the minute.
    pub fn floor_minute(self) -> Self {
        Timestamp(self.0 - self.0.rem_euclid(60))
    }

    pub fn write_to<W: Write>(self, w: &mut W, format: TimestampFormat) -> io::Result<()> {
        let dt = self.to_naive();
        let mut buf = [0u8; 19];
        let (y, mo, d) = (dt.year(), dt.month(), dt.day());
        let (h, mi, s) = (dt.hour(), dt.minute(), dt.second());
        match format {
            TimestampFormat::Dotted => {
                put2(&mut buf[0..2], d);
                buf[2] = b'.';
                put2(&mut buf[3..5], mo);
                buf[5] = b'.';
                put4(&mut buf[6..10], y);
            }
            TimestampFormat::Iso => {
                put4(&mut buf[0..4], y);
                buf[4] = b'-';
                put2(&mut buf[5..7], mo);
                buf[7] = b'-';
                put2(&mut buf[8..10], d);
            }
        }
        buf[10] = b' ';
        put2(&mut buf[11..13], h);
        buf[13] = b':';
        put2(&mut buf[14..16], mi);
        buf[16] = b':';
        put2(&mut buf[17..19], s);
        w.write_all(&buf)
    }

    pub fn format(self, format: TimestampFormat) -> String {
        let mut out = Vec::with_capacity(19);
        self.write_to(&mut out, format).expect("write to Vec");
        String::from_utf8(out).expect("ascii")
    }

    /// `YYYY-MM-DDTHH:MM:SS.000+00:00`, the XES date form.
    pub fn write_xes<W: Write>(self, w: &mut W) -> io::Result<()> {
        let mut iso = Vec::with_capacity(19);
        self.write_to(&mut iso, TimestampFormat::Iso)?;
        iso[10] = b'T';
        w.write_all(&iso)?;
        w.write_all(b".000+00:00")
    }

    pub fn to_xes_string(self) -> String {
        let mut out = Vec::with_capacity(29);
        self.write_xes(&mut out).expect("write to Vec");
        String::from_utf8(out).expect("ascii")
    }
}

fn digits(b: &[u8]) -> Option<u32> {
    b.iter().try_fold(0u32, |acc, c| {
        c.is_ascii_digit().then(|| acc * 10 + (c - b'0') as u32)
    })
}

fn put2(out: &mut [u8], v: u32) {
    out[0] = b'0' + (v / 10 % 10) as u8;
    out[1] = b'0' + (v % 10) as u8;
}

fn put4(out: &mut [u8], v: i32) {
    let v = v.rem_euclid(10_000) as u32;
    put2(&mut out[0..2], v / 100);
    put2(&mut out[2..4], v % 100);
}

impl Add<i64> for Timestamp {
    type Output = Timestamp;

    fn add(self, secs: i64) -> Timestamp {
        Timestamp(self.0 + secs)
    }
}

impl Sub for Timestamp {
    type Output = i64;

    /// Difference in seconds.
    fn sub(self, rhs: Timestamp) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format(TimestampFormat::Iso))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.format(TimestampFormat::Iso))
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Timestamp::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid timestamp {text:?}")))
    }
}
