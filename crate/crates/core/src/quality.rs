//! Data-quality checks over an assembled log.
//!
//! Every rate is per case: a case counts once however many of its events
//! violate a rule. Each result states its denominator, and
//! `rate_pct == 100 * affected / applicable` exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activity::ActivityKind;
use crate::error::{Error, Result};
use crate::log::{EventLog, Trace};
use crate::source::StayId;
use crate::value::{AttrKey, AttributeValue};

const SAMPLE_SIZE: usize = 20;

/// Which activities may not be missing from a case, which values must be
/// present, and so on. Rules load from TOML as a list of `[[rule]]` tables
/// tagged by `kind`:
///
/// ```toml
/// [[rule]]
/// kind = "range"
/// attribute = "pain"
/// low = 0
/// high = 10
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QualityRule {
    MissingValue {
        attributes: Vec<AttrKey>,
    },
    IncompleteCase {
        mandatory: Vec<ActivityKind>,
    },
    /// Among cases where `if_attribute == if_value`, `then_attribute` must be
    /// present (or absent when `then_present` is false).
    Dependency {
        if_attribute: AttrKey,
        if_value: String,
        then_attribute: AttrKey,
        then_present: bool,
    },
    TimeAnomaly,
    MultiRegistration,
    Range {
        attribute: AttrKey,
        low: f64,
        high: f64,
        /// Count values that do not parse as numbers as out of range.
        #[serde(default = "yes")]
        non_numeric_out_of_range: bool,
    },
    Format,
}

fn yes() -> bool {
    true
}

impl QualityRule {
    pub fn kind(&self) -> &'static str {
        match self {
            QualityRule::MissingValue { .. } => "missing_value",
            QualityRule::IncompleteCase { .. } => "incomplete_case",
            QualityRule::Dependency { .. } => "dependency",
            QualityRule::TimeAnomaly => "time_anomaly",
            QualityRule::MultiRegistration => "multi_registration",
            QualityRule::Range { .. } => "range",
            QualityRule::Format => "format",
        }
    }

    fn validate(&self) -> Result<()> {
        let known = |k: &AttrKey| {
            if k.is_known() {
                Ok(())
            } else {
                Err(Error::config(format!("{} rule: unknown attribute {k}", self.kind())))
            }
        };
        match self {
            QualityRule::MissingValue { attributes } => {
                if attributes.is_empty() {
                    return Err(Error::config("missing_value rule needs attributes"));
                }
                attributes.iter().try_for_each(known)
            }
            QualityRule::IncompleteCase { mandatory } if mandatory.is_empty() => {
                Err(Error::config("incomplete_case rule needs mandatory activities"))
            }
            QualityRule::Dependency {
                if_attribute,
                then_attribute,
                ..
            } => {
                known(if_attribute)?;
                known(then_attribute)
            }
            QualityRule::Range {
                attribute,
                low,
                high,
                ..
            } => {
                known(attribute)?;
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::config(format!(
                        "range rule for {attribute}: need finite low <= high"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSet {
    #[serde(rename = "rule")]
    pub rules: Vec<QualityRule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            rules: vec![
                QualityRule::MissingValue {
                    attributes: vec![
                        AttrKey::SUBJECT_ID,
                        AttrKey::GENDER,
                        AttrKey::RACE,
                        AttrKey::ACUITY,
                        AttrKey::ARRIVAL_TRANSPORT,
                        AttrKey::DISPOSITION,
                    ],
                },
                QualityRule::IncompleteCase {
                    mandatory: vec![
                        ActivityKind::Enter,
                        ActivityKind::Triage,
                        ActivityKind::Discharge,
                    ],
                },
                QualityRule::Dependency {
                    if_attribute: AttrKey::DISPOSITION,
                    if_value: "ADMITTED".into(),
                    then_attribute: AttrKey::HADM_ID,
                    then_present: true,
                },
                QualityRule::Dependency {
                    if_attribute: AttrKey::DISPOSITION,
                    if_value: "HOME".into(),
                    then_attribute: AttrKey::HADM_ID,
                    then_present: false,
                },
                QualityRule::TimeAnomaly,
                QualityRule::MultiRegistration,
                QualityRule::Range {
                    attribute: AttrKey::PAIN,
                    low: 0.0,
                    high: 10.0,
                    non_numeric_out_of_range: true,
                },
                QualityRule::Range {
                    attribute: AttrKey::ACUITY,
                    low: 1.0,
                    high: 5.0,
                    non_numeric_out_of_range: true,
                },
                QualityRule::Format,
            ],
        }
    }
}

impl RuleSet {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let set: RuleSet =
            toml::from_str(text).map_err(|e| Error::config(format!("quality rules: {e}")))?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RuleSet::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_toml_str(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rules.iter().try_for_each(QualityRule::validate)
    }
}

/// Outcome of one rule item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub kind: String,
    /// Human-readable item, e.g. `attribute acuity`.
    pub item: String,
    /// What `applicable` counts.
    pub denominator: String,
    pub applicable: u64,
    pub affected: u64,
    pub rate_pct: f64,
    /// Informational results (multi-registration) are not findings.
    pub is_finding: bool,
    pub sample_case_ids: Vec<StayId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip)]
    pub affected_case_ids: Vec<StayId>,
}

impl RuleResult {
    fn new(kind: &str, item: String, denominator: &str, applicable: u64, affected: Vec<StayId>) -> Self {
        let n = affected.len() as u64;
        RuleResult {
            kind: kind.to_owned(),
            item,
            denominator: denominator.to_owned(),
            applicable,
            affected: n,
            rate_pct: rate(n, applicable),
            is_finding: true,
            sample_case_ids: affected.iter().take(SAMPLE_SIZE).copied().collect(),
            detail: None,
            affected_case_ids: affected,
        }
    }
}

pub fn rate(affected: u64, applicable: u64) -> f64 {
    if applicable == 0 {
        0.0
    } else {
        100.0 * affected as f64 / applicable as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompleteCase {
    pub case_id: StayId,
    pub missing: Vec<ActivityKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Second,
    Minute,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Second => "second",
            Granularity::Minute => "minute",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureUnit {
    Celsius,
    Fahrenheit,
    Implausible,
}

/// Celsius in [25, 45], Fahrenheit in [80, 115], anything else implausible.
pub fn classify_temperature(value: f64) -> TemperatureUnit {
    if (25.0..=45.0).contains(&value) {
        TemperatureUnit::Celsius
    } else if (80.0..=115.0).contains(&value) {
        TemperatureUnit::Fahrenheit
    } else {
        TemperatureUnit::Implausible
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemperatureUnits {
    pub values: u64,
    pub celsius: u64,
    pub fahrenheit: u64,
    /// Out of both bands, or not a number.
    pub implausible: u64,
    pub celsius_pct: f64,
    pub fahrenheit_pct: f64,
    pub implausible_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FormatReport {
    pub granularity: BTreeMap<ActivityKind, Granularity>,
    pub temperature: TemperatureUnits,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub case_count: u64,
    pub results: Vec<RuleResult>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub incomplete_cases: Vec<IncompleteCase>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub format: Option<FormatReport>,
}

impl QualityReport {
    pub fn has_findings(&self) -> bool {
        self.results.iter().any(|r| r.is_finding && r.affected > 0)
    }

    /// First result of `kind` whose item mentions `needle`.
    pub fn find(&self, kind: &str, needle: &str) -> Option<&RuleResult> {
        self.results
            .iter()
            .find(|r| r.kind == kind && r.item.contains(needle))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn summary(&self) -> String {
        self.to_string()
    }
}

fn problem_label(kind: &str) -> &'static str {
    match kind {
        "missing_value" => "Missing values",
        "incomplete_case" => "Incomplete cases",
        "dependency" => "Violation of mutual dependencies",
        "time_anomaly" => "Invalid timestamps",
        "multi_registration" => "Multi-registration",
        "range" => "Outside domain range",
        "format" => "Inconsistent formatting",
        _ => "Other",
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Cases checked: {}", self.case_count)?;
        writeln!(f, "{:<34} | {:<60} | Result", "Data quality problem", "Item for validation")?;
        writeln!(f, "{}", "-".repeat(120))?;
        for r in &self.results {
            writeln!(
                f,
                "{:<34} | {:<60} | {:.2}% ({} of {} {})",
                problem_label(&r.kind),
                r.item,
                r.rate_pct,
                r.affected,
                r.applicable,
                r.denominator
            )?;
        }
        if let Some(fmt_report) = &self.format {
            let grains: Vec<String> = fmt_report
                .granularity
                .iter()
                .map(|(k, g)| format!("{}={g}", k.name()))
                .collect();
            writeln!(
                f,
                "{:<34} | {:<60} | {}",
                problem_label("format"),
                "attribute timestamp",
                grains.join(", ")
            )?;
            let t = &fmt_report.temperature;
            write!(
                f,
                "{:<34} | {:<60} | Fahrenheit {:.2}%, Celsius {:.2}%, implausible {:.2}% of {} values",
                problem_label("format"),
                "attribute temperature",
                t.fahrenheit_pct,
                t.celsius_pct,
                t.implausible_pct,
                t.values
            )?;
        }
        Ok(())
    }
}

/// Runs every rule of `rules` over `log`.
pub fn run_quality_checks(log: &EventLog, rules: &RuleSet) -> Result<QualityReport> {
    rules.validate()?;
    let parts: Vec<Part> = rules.rules.par_iter().map(|r| run_rule(log, r)).collect();
    let mut report = QualityReport {
        case_count: log.case_count() as u64,
        ..Default::default()
    };
    for p in parts {
        report.results.extend(p.results);
        report.incomplete_cases.extend(p.incomplete);
        if p.format.is_some() {
            report.format = p.format;
        }
    }
    Ok(report)
}

#[derive(Default)]
struct Part {
    results: Vec<RuleResult>,
    incomplete: Vec<IncompleteCase>,
    format: Option<FormatReport>,
}

fn run_rule(log: &EventLog, rule: &QualityRule) -> Part {
    match rule {
        QualityRule::MissingValue { attributes } => Part {
            results: check_missing_values(log, attributes),
            ..Default::default()
        },
        QualityRule::IncompleteCase { mandatory } => {
            let (result, incomplete) = check_incomplete_cases(log, mandatory);
            Part {
                results: vec![result],
                incomplete,
                ..Default::default()
            }
        }
        QualityRule::Dependency {
            if_attribute,
            if_value,
            then_attribute,
            then_present,
        } => Part {
            results: vec![check_attribute_dependency(
                log,
                *if_attribute,
                if_value,
                *then_attribute,
                *then_present,
            )],
            ..Default::default()
        },
        QualityRule::TimeAnomaly => Part {
            results: vec![check_time_anomalies(log)],
            ..Default::default()
        },
        QualityRule::MultiRegistration => Part {
            results: check_multi_registration(log),
            ..Default::default()
        },
        QualityRule::Range {
            attribute,
            low,
            high,
            non_numeric_out_of_range,
        } => Part {
            results: vec![check_attribute_range(
                log,
                *attribute,
                *low,
                *high,
                *non_numeric_out_of_range,
            )],
            ..Default::default()
        },
        QualityRule::Format => {
            let (report, results) = check_format_consistency(log);
            Part {
                results,
                format: Some(report),
                ..Default::default()
            }
        }
    }
}

fn is_missing(t: &Trace, key: AttrKey) -> bool {
    !t.attribute_values(key).any(AttributeValue::is_present)
}

/// Per attribute: cases with no usable value. Unparsable raw values count as
/// missing. Denominator: all cases.
pub fn check_missing_values(log: &EventLog, attributes: &[AttrKey]) -> Vec<RuleResult> {
    attributes
        .iter()
        .map(|&key| {
            let affected: Vec<StayId> = log
                .traces
                .iter()
                .filter(|t| is_missing(t, key))
                .map(|t| t.case_id)
                .collect();
            RuleResult::new(
                "missing_value",
                format!("attribute {key}"),
                "cases",
                log.case_count() as u64,
                affected,
            )
        })
        .collect()
}

/// Cases lacking at least one of `mandatory`. Denominator: all cases.
pub fn check_incomplete_cases(
    log: &EventLog,
    mandatory: &[ActivityKind],
) -> (RuleResult, Vec<IncompleteCase>) {
    let mut incomplete = Vec::new();
    for t in &log.traces {
        let mut seen = [false; ActivityKind::ALL.len()];
        for e in &t.events {
            seen[e.activity.index()] = true;
        }
        let missing: Vec<ActivityKind> = mandatory
            .iter()
            .copied()
            .filter(|k| !seen[k.index()])
            .collect();
        if !missing.is_empty() {
            incomplete.push(IncompleteCase {
                case_id: t.case_id,
                missing,
            });
        }
    }
    let names: Vec<&str> = mandatory.iter().map(|k| k.name()).collect();
    let mut result = RuleResult::new(
        "incomplete_case",
        format!("mandatory activities {{{}}}", names.join(", ")),
        "cases",
        log.case_count() as u64,
        incomplete.iter().map(|c| c.case_id).collect(),
    );
    if !incomplete.is_empty() {
        let mut per_kind: BTreeMap<ActivityKind, u64> = BTreeMap::new();
        for c in &incomplete {
            for k in &c.missing {
                *per_kind.entry(*k).or_default() += 1;
            }
        }
        let parts: Vec<String> = per_kind
            .iter()
            .map(|(k, n)| format!("{n} without {}", k.name()))
            .collect();
        result.detail = Some(parts.join("; "));
    }
    (result, incomplete)
}

/// Among cases whose `if_attribute` equals `if_value`, those violating the
/// presence requirement on `then_attribute`. Denominator: the matching cases.
pub fn check_attribute_dependency(
    log: &EventLog,
    if_attribute: AttrKey,
    if_value: &str,
    then_attribute: AttrKey,
    then_present: bool,
) -> RuleResult {
    let mut applicable = 0;
    let mut affected = Vec::new();
    for t in &log.traces {
        let matches = t
            .attribute_values(if_attribute)
            .any(|v| v.as_str() == Some(if_value));
        if !matches {
            continue;
        }
        applicable += 1;
        let present = !is_missing(t, then_attribute);
        if present != then_present {
            affected.push(t.case_id);
        }
    }
    let requirement = if then_present { "is \"NA\"" } else { "is not \"NA\"" };
    RuleResult::new(
        "dependency",
        format!("attribute {if_attribute} = \"{if_value}\" & {then_attribute} {requirement}"),
        &format!("cases with {if_attribute} = {if_value}"),
        applicable,
        affected,
    )
}

/// Cases whose discharge does not come strictly after entry. Denominator:
/// cases having both an enter and a discharge event.
pub fn check_time_anomalies(log: &EventLog) -> RuleResult {
    let mut applicable = 0;
    let mut affected = Vec::new();
    for t in &log.traces {
        let (Some(enter), Some(discharge)) = (t.enter_time(), t.discharge_time()) else {
            continue;
        };
        applicable += 1;
        if discharge - enter <= 0 {
            affected.push(t.case_id);
        }
    }
    RuleResult::new(
        "time_anomaly",
        "case duration (discharge - enter) <= 0".into(),
        "cases with enter and discharge",
        applicable,
        affected,
    )
}

/// Per activity: among cases containing it, those recording it at least
/// twice with one identical timestamp. Informational only.
pub fn check_multi_registration(log: &EventLog) -> Vec<RuleResult> {
    let mut containing = [0u64; ActivityKind::ALL.len()];
    let mut repeated: [Vec<StayId>; ActivityKind::ALL.len()] = Default::default();
    let mut pairs = Vec::new();
    for t in &log.traces {
        pairs.clear();
        pairs.extend(t.events.iter().map(|e| (e.activity, e.timestamp)));
        pairs.sort_unstable();
        let mut last: Option<ActivityKind> = None;
        let mut flagged = [false; ActivityKind::ALL.len()];
        for (i, (k, ts)) in pairs.iter().enumerate() {
            if last != Some(*k) {
                containing[k.index()] += 1;
                last = Some(*k);
            }
            if i > 0 && pairs[i - 1] == (*k, *ts) && !flagged[k.index()] {
                flagged[k.index()] = true;
                repeated[k.index()].push(t.case_id);
            }
        }
    }
    ActivityKind::ALL
        .iter()
        .filter(|k| containing[k.index()] > 0)
        .map(|k| {
            let mut r = RuleResult::new(
                "multi_registration",
                format!("activity {}", k.name()),
                &format!("cases containing {}", k.name()),
                containing[k.index()],
                std::mem::take(&mut repeated[k.index()]),
            );
            r.is_finding = false;
            r
        })
        .collect()
}

/// Cases holding at least one value of `attribute` outside `[low, high]`
/// (or not a number, when `non_numeric_out_of_range`). Missing values do not
/// count. Denominator: all cases.
pub fn check_attribute_range(
    log: &EventLog,
    attribute: AttrKey,
    low: f64,
    high: f64,
    non_numeric_out_of_range: bool,
) -> RuleResult {
    let out = |v: &AttributeValue| match v {
        AttributeValue::Absent => false,
        AttributeValue::AbsentRaw(_) => non_numeric_out_of_range,
        other => match other.as_number() {
            Some(x) => x < low || x > high,
            None => non_numeric_out_of_range,
        },
    };
    let affected: Vec<StayId> = log
        .traces
        .iter()
        .filter(|t| t.attribute_values(attribute).any(out))
        .map(|t| t.case_id)
        .collect();
    RuleResult::new(
        "range",
        format!("attribute {attribute} in [{low}, {high}]"),
        "cases",
        log.case_count() as u64,
        affected,
    )
}

/// Timestamp granularity per activity and temperature units.
///
/// Also returns two case-level findings: cases with a temperature read as
/// Celsius, and cases with an implausible temperature. Denominator: cases
/// with at least one temperature value.
pub fn check_format_consistency(log: &EventLog) -> (FormatReport, Vec<RuleResult>) {
    let mut report = FormatReport::default();
    let mut seconds = [false; ActivityKind::ALL.len()];
    let mut present = [false; ActivityKind::ALL.len()];
    let mut with_temp = 0;
    let mut celsius_cases = Vec::new();
    let mut implausible_cases = Vec::new();
    let t = &mut report.temperature;
    for trace in &log.traces {
        let mut any = false;
        let (mut c, mut i) = (false, false);
        for e in &trace.events {
            present[e.activity.index()] = true;
            if e.timestamp.second_of_minute() != 0 {
                seconds[e.activity.index()] = true;
            }
        }
        for v in trace.attribute_values(AttrKey::TEMPERATURE) {
            any = true;
            t.values += 1;
            match v.as_number().map(classify_temperature) {
                Some(TemperatureUnit::Celsius) => {
                    t.celsius += 1;
                    c = true;
                }
                Some(TemperatureUnit::Fahrenheit) => t.fahrenheit += 1,
                _ => {
                    t.implausible += 1;
                    i = true;
                }
            }
        }
        if any {
            with_temp += 1;
        }
        if c {
            celsius_cases.push(trace.case_id);
        }
        if i {
            implausible_cases.push(trace.case_id);
        }
    }
    t.celsius_pct = rate(t.celsius, t.values);
    t.fahrenheit_pct = rate(t.fahrenheit, t.values);
    t.implausible_pct = rate(t.implausible, t.values);
    for k in ActivityKind::ALL {
        if present[k.index()] {
            let g = if seconds[k.index()] {
                Granularity::Second
            } else {
                Granularity::Minute
            };
            report.granularity.insert(k, g);
        }
    }
    let results = vec![
        RuleResult::new(
            "format",
            "attribute temperature recorded in Celsius".into(),
            "cases with temperature",
            with_temp,
            celsius_cases,
        ),
        RuleResult::new(
            "format",
            "attribute temperature implausible in both units".into(),
            "cases with temperature",
            with_temp,
            implausible_cases,
        ),
    ];
    (report, results)
}
