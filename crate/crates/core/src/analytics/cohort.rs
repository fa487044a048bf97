//! Path statistics compared across cohorts of cases.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::crowd::crowdedness;
use super::los::{los_minutes, AcuityBand, Quadrant};
use super::paths::{path_statistics, Aggregation, PathStats};
use crate::activity::ActivityKind;
use crate::error::Result;
use crate::log::{EventLog, Trace};
use crate::source::StayId;

/// How cases are partitioned into cohorts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    /// By the `disposition` case attribute.
    Disposition,
    /// Crowded versus not crowded, counts taken over the whole input log.
    Crowdedness { percentile: f64, include_self: bool },
    /// By acuity × LoS quadrant.
    Quadrant { threshold_minutes: f64 },
    /// By raw acuity level.
    Acuity,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Disposition => "disposition",
            Split::Crowdedness { .. } => "crowdedness",
            Split::Quadrant { .. } => "quadrant",
            Split::Acuity => "acuity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub cohort: String,
    pub cases: u64,
    pub paths: Vec<PathStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortComparison {
    pub split: String,
    /// Cases on which the split is undefined.
    pub excluded: u64,
    pub rows: Vec<CohortRow>,
}

/// Cohort label of every case, `None` where the split is undefined.
pub fn cohort_labels(log: &EventLog, split: &Split) -> Result<Vec<Option<String>>> {
    Ok(match *split {
        Split::Disposition => log
            .traces
            .iter()
            .map(|t| t.disposition().map(str::to_owned))
            .collect(),
        Split::Acuity => log
            .traces
            .iter()
            .map(|t| t.acuity().map(|a| a.to_string()))
            .collect(),
        Split::Quadrant { threshold_minutes } => log
            .traces
            .iter()
            .map(|t| quadrant_of(t, threshold_minutes).map(|q| q.name().to_owned()))
            .collect(),
        Split::Crowdedness {
            percentile,
            include_self,
        } => {
            let c = crowdedness(log, percentile, include_self)?;
            let by_id: HashMap<StayId, bool> =
                c.records.iter().map(|r| (r.stay_id, r.crowded)).collect();
            log.traces
                .iter()
                .map(|t| {
                    by_id.get(&t.case_id).map(|&crowded| {
                        if crowded { "crowded" } else { "not crowded" }.to_owned()
                    })
                })
                .collect()
        }
    })
}

/// Quadrant of one trace, `None` without both enter and discharge or when
/// acuity is unknown.
pub fn quadrant_of(trace: &Trace, threshold_minutes: f64) -> Option<Quadrant> {
    let los = los_minutes(trace)?;
    match Quadrant::of(AcuityBand::of(trace.acuity()), los, threshold_minutes) {
        Quadrant::Unclassified => None,
        q => Some(q),
    }
}

/// Keeps only cases whose label under `split` equals `cohort`.
pub fn select_cohort(log: &EventLog, split: &Split, cohort: &str) -> Result<EventLog> {
    let labels = cohort_labels(log, split)?;
    let mut out = EventLog {
        traces: Vec::new(),
        metadata: log.metadata.clone(),
    };
    for (t, l) in log.traces.iter().zip(labels) {
        if l.as_deref() == Some(cohort) {
            out.traces.push(t.clone());
        }
    }
    Ok(out)
}

/// Cohorts are ordered by label; each row holds [`path_statistics`] for
/// every requested path over the cohort's cases.
pub fn cohort_compare(
    log: &EventLog,
    split: &Split,
    paths: &[(ActivityKind, ActivityKind)],
    aggregation: Aggregation,
) -> Result<CohortComparison> {
    let labels = cohort_labels(log, split)?;
    let mut groups: BTreeMap<String, Vec<Trace>> = BTreeMap::new();
    let mut excluded = 0;
    for (t, l) in log.traces.iter().zip(labels) {
        match l {
            Some(l) => groups.entry(l).or_default().push(t.clone()),
            None => excluded += 1,
        }
    }
    let rows = groups
        .into_iter()
        .map(|(cohort, traces)| {
            let sub = EventLog {
                traces,
                metadata: log.metadata.clone(),
            };
            CohortRow {
                cohort,
                cases: sub.case_count() as u64,
                paths: paths
                    .iter()
                    .map(|&(a, b)| path_statistics(&sub, a, b, aggregation))
                    .collect(),
            }
        })
        .collect();
    Ok(CohortComparison {
        split: split.name().to_owned(),
        excluded,
        rows,
    })
}

fn fmt_minutes(m: Option<f64>) -> String {
    m.map_or_else(|| "-".to_owned(), |m| format!("{m:.1}"))
}

impl CohortComparison {
    /// Long format: one line per cohort and path.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "cohort,cases,from,to,cases_with_path,case_coverage_pct,occurrences,median_minutes\n",
        );
        for r in &self.rows {
            for p in &r.paths {
                out.push_str(&format!(
                    "{},{},{},{},{},{:.2},{},{}\n",
                    csv_field(&r.cohort),
                    r.cases,
                    p.from.name(),
                    p.to.name(),
                    p.cases_with_path,
                    p.case_coverage_pct,
                    p.occurrences,
                    p.median_minutes.map_or(String::new(), |m| format!("{m}"))
                ));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl fmt::Display for CohortComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Median duration (minutes) by {}", self.split)?;
        let Some(first) = self.rows.first() else {
            return writeln!(f, "(no cohorts; {} cases excluded)", self.excluded);
        };
        write!(f, "{:<50}", "path")?;
        for r in &self.rows {
            write!(f, " {:>18}", format!("{} (n={})", r.cohort, r.cases))?;
        }
        writeln!(f)?;
        for (i, p) in first.paths.iter().enumerate() {
            write!(f, "{:<50}", format!("{} -> {}", p.from.name(), p.to.name()))?;
            for r in &self.rows {
                let s = &r.paths[i];
                write!(
                    f,
                    " {:>18}",
                    format!("{} ({:.1}%)", fmt_minutes(s.median_minutes), s.case_coverage_pct)
                )?;
            }
            writeln!(f)?;
        }
        if self.excluded > 0 {
            writeln!(f, "{} cases excluded (split undefined)", self.excluded)?;
        }
        Ok(())
    }
}
