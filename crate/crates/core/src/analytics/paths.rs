//! Statistics for a single directly-follows path.

use serde::{Deserialize, Serialize};

use super::stats::{median, median_minutes};
use crate::activity::ActivityKind;
use crate::log::EventLog;
use crate::quality::rate;

/// How durations of a path are pooled before taking the median.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Median over every occurrence in the log.
    #[default]
    Pooled,
    /// Median over cases of each case's mean occurrence duration.
    PerCaseMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub from: ActivityKind,
    pub to: ActivityKind,
    pub case_count: u64,
    pub cases_with_path: u64,
    pub case_coverage_pct: f64,
    pub occurrences: u64,
    pub median_minutes: Option<f64>,
}

pub fn path_statistics(
    log: &EventLog,
    from: ActivityKind,
    to: ActivityKind,
    aggregation: Aggregation,
) -> PathStats {
    let mut pooled: Vec<i64> = Vec::new();
    let mut case_means: Vec<f64> = Vec::new();
    let mut cases_with_path = 0;
    for t in &log.traces {
        let before = pooled.len();
        for w in t.events.windows(2) {
            if w[0].activity == from && w[1].activity == to {
                pooled.push(w[1].timestamp - w[0].timestamp);
            }
        }
        let mine = &pooled[before..];
        if !mine.is_empty() {
            cases_with_path += 1;
            let sum: i64 = mine.iter().sum();
            case_means.push(sum as f64 / mine.len() as f64 / 60.0);
        }
    }
    let occurrences = pooled.len() as u64;
    let median_minutes = match aggregation {
        Aggregation::Pooled => median_minutes(&mut pooled),
        Aggregation::PerCaseMean => median(&mut case_means),
    };
    PathStats {
        from,
        to,
        case_count: log.case_count() as u64,
        cases_with_path,
        case_coverage_pct: rate(cases_with_path, log.case_count() as u64),
        occurrences,
        median_minutes,
    }
}
