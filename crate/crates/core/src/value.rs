//! Attribute keys, typed attribute values and the compact attribute map
//! shared by events and traces.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::time::{Timestamp, TimestampFormat};

/// Columns of the fixed source schema, in documented output order:
/// case attributes first, then event attributes.
const KNOWN_KEYS: [(&str, ValueType); 29] = [
    ("stay_id", ValueType::Integer),
    ("subject_id", ValueType::Integer),
    ("gender", ValueType::Text),
    ("race", ValueType::Text),
    ("arrival_transport", ValueType::Text),
    ("disposition", ValueType::Text),
    ("acuity", ValueType::Integer),
    ("chiefcomplaint", ValueType::Text),
    ("hadm_id", ValueType::Integer),
    ("temperature", ValueType::Decimal),
    ("heartrate", ValueType::Decimal),
    ("resprate", ValueType::Decimal),
    ("o2sat", ValueType::Decimal),
    ("sbp", ValueType::Decimal),
    ("dbp", ValueType::Decimal),
    ("pain", ValueType::Text),
    ("rhythm", ValueType::Text),
    ("med_rn", ValueType::Integer),
    ("seq_num", ValueType::Integer),
    ("name", ValueType::Text),
    ("gsn", ValueType::Text),
    ("ndc", ValueType::Text),
    ("etc_rn", ValueType::Integer),
    ("etccode", ValueType::Text),
    ("etcdescription", ValueType::Text),
    ("gsn_rn", ValueType::Integer),
    ("icd_code", ValueType::Text),
    ("icd_version", ValueType::Integer),
    ("icd_title", ValueType::Text),
];

const KNOWN_COUNT: u32 = KNOWN_KEYS.len() as u32;

/// Interned attribute name.
///
/// Schema columns have fixed indices (see the associated constants); any
/// other name is interned on first use. Ordering puts schema columns first
/// in schema order, then other names alphabetically, so sorted attribute
/// maps are canonical across processes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttrKey(u32);

struct Interner {
    names: Vec<&'static str>,
    index: HashMap<&'static str, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        let names: Vec<&'static str> = KNOWN_KEYS.iter().map(|(n, _)| *n).collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, i as u32))
            .collect();
        RwLock::new(Interner { names, index })
    })
}

impl AttrKey {
    pub const STAY_ID: AttrKey = AttrKey(0);
    pub const SUBJECT_ID: AttrKey = AttrKey(1);
    pub const GENDER: AttrKey = AttrKey(2);
    pub const RACE: AttrKey = AttrKey(3);
    pub const ARRIVAL_TRANSPORT: AttrKey = AttrKey(4);
    pub const DISPOSITION: AttrKey = AttrKey(5);
    pub const ACUITY: AttrKey = AttrKey(6);
    pub const CHIEFCOMPLAINT: AttrKey = AttrKey(7);
    pub const HADM_ID: AttrKey = AttrKey(8);
    pub const TEMPERATURE: AttrKey = AttrKey(9);
    pub const HEARTRATE: AttrKey = AttrKey(10);
    pub const RESPRATE: AttrKey = AttrKey(11);
    pub const O2SAT: AttrKey = AttrKey(12);
    pub const SBP: AttrKey = AttrKey(13);
    pub const DBP: AttrKey = AttrKey(14);
    pub const PAIN: AttrKey = AttrKey(15);
    pub const RHYTHM: AttrKey = AttrKey(16);
    pub const MED_RN: AttrKey = AttrKey(17);
    pub const SEQ_NUM: AttrKey = AttrKey(18);
    pub const NAME: AttrKey = AttrKey(19);
    pub const GSN: AttrKey = AttrKey(20);
    pub const NDC: AttrKey = AttrKey(21);
    pub const ETC_RN: AttrKey = AttrKey(22);
    pub const ETCCODE: AttrKey = AttrKey(23);
    pub const ETCDESCRIPTION: AttrKey = AttrKey(24);
    pub const GSN_RN: AttrKey = AttrKey(25);
    pub const ICD_CODE: AttrKey = AttrKey(26);
    pub const ICD_VERSION: AttrKey = AttrKey(27);
    pub const ICD_TITLE: AttrKey = AttrKey(28);

    pub fn new(name: &str) -> AttrKey {
        if let Some(i) = KNOWN_KEYS.iter().position(|(n, _)| *n == name) {
            return AttrKey(i as u32);
        }
        let lock = interner();
        if let Some(&i) = lock.read().expect("interner poisoned").index.get(name) {
            return AttrKey(i);
        }
        let mut w = lock.write().expect("interner poisoned");
        if let Some(&i) = w.index.get(name) {
            return AttrKey(i);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let i = u32::try_from(w.names.len()).expect("attribute name space exhausted");
        w.names.push(leaked);
        w.index.insert(leaked, i);
        AttrKey(i)
    }

    /// Returns the key only if it belongs to the fixed source schema.
    pub fn known(name: &str) -> Option<AttrKey> {
        KNOWN_KEYS
            .iter()
            .position(|(n, _)| *n == name)
            .map(|i| AttrKey(i as u32))
    }

    pub fn is_known(self) -> bool {
        self.0 < KNOWN_COUNT
    }

    /// Dense index, schema columns first.
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all_known() -> impl Iterator<Item = AttrKey> {
        (0..KNOWN_COUNT).map(AttrKey)
    }

    pub fn name(self) -> &'static str {
        if self.is_known() {
            KNOWN_KEYS[self.0 as usize].0
        } else {
            interner().read().expect("interner poisoned").names[self.0 as usize]
        }
    }

    /// Declared type for schema columns; other names are text.
    pub fn value_type(self) -> ValueType {
        if self.is_known() {
            KNOWN_KEYS[self.0 as usize].1
        } else {
            ValueType::Text
        }
    }
}

impl Ord for AttrKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_known(), other.is_known()) {
            (true, true) => self.0.cmp(&other.0),
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) if self.0 == other.0 => Ordering::Equal,
            (false, false) => self.name().cmp(other.name()),
        }
    }
}

impl PartialOrd for AttrKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for AttrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AttrKey({})", self.name())
    }
}

impl fmt::Display for AttrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for AttrKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AttrKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Ok(AttrKey::new(&name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Text,
    Integer,
    Decimal,
}

/// Exact decimal as written in the source (`98.0` keeps its trailing zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: i64,
    scale: u8,
}

impl Decimal {
    pub fn new(mantissa: i64, scale: u8) -> Self {
        Decimal { mantissa, scale }
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    pub fn is_integral(self) -> bool {
        self.mantissa % 10i64.pow(self.scale as u32) == 0
    }
}

impl FromStr for Decimal {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            _ => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if (int.is_empty() && frac.is_empty())
            || int.len() + frac.len() > 18
            || frac.len() > u8::MAX as usize
            || !int.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit())
            || (body.contains('.') && frac.is_empty())
        {
            return Err(());
        }
        let mut mantissa: i64 = 0;
        for c in int.bytes().chain(frac.bytes()) {
            mantissa = mantissa * 10 + (c - b'0') as i64;
        }
        Ok(Decimal {
            mantissa: if neg { -mantissa } else { mantissa },
            scale: frac.len() as u8,
        })
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let pow = 10u64.pow(self.scale as u32);
        let abs = self.mantissa.unsigned_abs();
        let sign = if self.mantissa < 0 { "-" } else { "" };
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / pow,
            abs % pow,
            width = self.scale as usize
        )
    }
}

/// A single attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeValue {
    Text(Arc<str>),
    Integer(i64),
    Decimal(Decimal),
    Timestamp(Timestamp),
    /// Value that failed to parse as its declared type; the raw text is kept.
    AbsentRaw(Arc<str>),
    Absent,
}

impl AttributeValue {
    /// Interprets `raw` according to `ty`. Empty text is absent; text that
    /// does not parse as the declared numeric type is kept as `AbsentRaw`.
    pub fn typed(ty: ValueType, raw: &str) -> AttributeValue {
        if raw.is_empty() {
            return AttributeValue::Absent;
        }
        match ty {
            ValueType::Text => AttributeValue::Text(raw.into()),
            ValueType::Integer => parse_integer(raw)
                .map(AttributeValue::Integer)
                .unwrap_or_else(|| AttributeValue::AbsentRaw(raw.into())),
            ValueType::Decimal => raw
                .parse::<Decimal>()
                .map(AttributeValue::Decimal)
                .unwrap_or_else(|_| AttributeValue::AbsentRaw(raw.into())),
        }
    }

    pub fn text(s: &str) -> AttributeValue {
        AttributeValue::Text(s.into())
    }

    /// Present means neither `Absent` nor `AbsentRaw`.
    pub fn is_present(&self) -> bool {
        !matches!(self, AttributeValue::Absent | AttributeValue::AbsentRaw(_))
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            AttributeValue::Integer(i) => Some(*i),
            AttributeValue::Decimal(d) if d.is_integral() => Some(d.to_f64() as i64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttributeValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric reading: integers, decimals, and text that parses as a number
    /// after trimming.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttributeValue::Integer(i) => Some(*i as f64),
            AttributeValue::Decimal(d) => Some(d.to_f64()),
            AttributeValue::Text(s) => s.trim().parse::<Decimal>().ok().map(Decimal::to_f64),
            _ => None,
        }
    }

    pub fn write_to<W: io::Write>(&self, w: &mut W, format: TimestampFormat) -> io::Result<()> {
        match self {
            AttributeValue::Text(s) | AttributeValue::AbsentRaw(s) => w.write_all(s.as_bytes()),
            AttributeValue::Integer(i) => write!(w, "{i}"),
            AttributeValue::Decimal(d) => write!(w, "{d}"),
            AttributeValue::Timestamp(t) => t.write_to(w, format),
            AttributeValue::Absent => Ok(()),
        }
    }

    /// Text as printed in CSV cells and XES values. Absent prints empty.
    pub fn render(&self, format: TimestampFormat) -> String {
        match self {
            AttributeValue::Text(s) | AttributeValue::AbsentRaw(s) => s.to_string(),
            AttributeValue::Integer(i) => i.to_string(),
            AttributeValue::Decimal(d) => d.to_string(),
            AttributeValue::Timestamp(t) => t.format(format),
            AttributeValue::Absent => String::new(),
        }
    }
}

/// Integer parse that also accepts an integral decimal such as `3.0`.
pub(crate) fn parse_integer(raw: &str) -> Option<i64> {
    if let Ok(i) = raw.parse::<i64>() {
        return Some(i);
    }
    let d: Decimal = raw.parse().ok()?;
    d.is_integral().then(|| d.mantissa / 10i64.pow(d.scale as u32))
}

impl From<i64> for AttributeValue {
    fn from(v: i64) -> Self {
        AttributeValue::Integer(v)
    }
}

impl From<&str> for AttributeValue {
    fn from(v: &str) -> Self {
        AttributeValue::Text(v.into())
    }
}

impl From<Decimal> for AttributeValue {
    fn from(v: Decimal) -> Self {
        AttributeValue::Decimal(v)
    }
}

/// Sorted key/value map without absent entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Attributes(Vec<(AttrKey, AttributeValue)>);

impl Attributes {
    pub fn new() -> Self {
        Attributes(Vec::new())
    }

    pub fn with_capacity(n: usize) -> Self {
        Attributes(Vec::with_capacity(n))
    }

    /// Inserts or replaces; inserting `Absent` removes the key.
    pub fn insert(&mut self, key: AttrKey, value: AttributeValue) {
        match self.0.binary_search_by(|(k, _)| k.cmp(&key)) {
            Ok(i) => {
                if value == AttributeValue::Absent {
                    self.0.remove(i);
                } else {
                    self.0[i].1 = value;
                }
            }
            Err(i) => {
                if value != AttributeValue::Absent {
                    self.0.insert(i, (key, value));
                }
            }
        }
    }

    pub fn get(&self, key: AttrKey) -> Option<&AttributeValue> {
        self.0
            .binary_search_by(|(k, _)| k.cmp(&key))
            .ok()
            .map(|i| &self.0[i].1)
    }

    pub fn remove(&mut self, key: AttrKey) -> Option<AttributeValue> {
        self.0
            .binary_search_by(|(k, _)| k.cmp(&key))
            .ok()
            .map(|i| self.0.remove(i).1)
    }

    pub fn contains(&self, key: AttrKey) -> bool {
        self.get(key).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AttrKey, &AttributeValue)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = AttrKey> + '_ {
        self.0.iter().map(|(k, _)| *k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shrink_to_fit(&mut self) {
        self.0.shrink_to_fit();
    }
}

impl FromIterator<(AttrKey, AttributeValue)> for Attributes {
    fn from_iter<I: IntoIterator<Item = (AttrKey, AttributeValue)>>(iter: I) -> Self {
        let mut v: Vec<_> = iter
            .into_iter()
            .filter(|(_, v)| *v != AttributeValue::Absent)
            .collect();
        v.sort_by_key(|a| a.0);
        // last write wins, like repeated insert
        v.reverse();
        v.dedup_by(|a, b| a.0 == b.0);
        v.reverse();
        Attributes(v)
    }
}
