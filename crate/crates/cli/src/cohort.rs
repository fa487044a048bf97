//! `--cohort attr=value[,attr=value...]` case filters.

use std::str::FromStr;

use edlog::{AttrKey, AttributeValue, Trace, TimestampFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct CohortFilter {
    terms: Vec<(AttrKey, String)>,
}

impl FromStr for CohortFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut terms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("cohort term {part:?} is not attr=value"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(format!("cohort term {part:?} has no attribute name"));
            }
            terms.push((AttrKey::new(k), v.trim().to_owned()));
        }
        if terms.is_empty() {
            return Err("empty cohort expression".into());
        }
        Ok(CohortFilter { terms })
    }
}

fn value_matches(value: &AttributeValue, wanted: &str) -> bool {
    if !value.is_present() {
        return false;
    }
    if value.render(TimestampFormat::Dotted) == wanted {
        return true;
    }
    // numeric comparison so that acuity=3 also matches a stored 3.0
    match (value.as_number(), wanted.parse::<f64>()) {
        (Some(a), Ok(b)) => a == b,
        _ => false,
    }
}

impl CohortFilter {
    /// True when every term matches some value of its attribute on the trace.
    pub fn matches(&self, trace: &Trace) -> bool {
        self.terms.iter().all(|(key, wanted)| {
            if *key == AttrKey::STAY_ID {
                return wanted.parse::<i64>().is_ok_and(|id| id == trace.case_id);
            }
            trace.attribute_values(*key).any(|v| value_matches(v, wanted))
        })
    }
}
