//! Directly-follows graph with frequency and duration annotations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::median_minutes;
use crate::activity::ActivityKind;
use crate::log::{EventLog, Trace};
use crate::quality::rate;

const K: usize = ActivityKind::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub activity: ActivityKind,
    /// Cases containing the activity at least once.
    pub case_count: u64,
    pub case_pct: f64,
    pub occurrences: u64,
    /// Median of the activity's self-loop durations, when it repeats directly.
    pub median_self_loop_minutes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub from: ActivityKind,
    pub to: ActivityKind,
    pub case_count: u64,
    pub case_pct: f64,
    pub occurrences: u64,
    pub median_minutes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointStats {
    pub activity: ActivityKind,
    pub case_count: u64,
    pub case_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dfg {
    pub case_count: u64,
    /// Activities seen in the log, in priority order.
    pub nodes: Vec<NodeStats>,
    /// Observed pairs ordered by (from, to).
    pub edges: Vec<EdgeStats>,
    pub start: Vec<EndpointStats>,
    pub end: Vec<EndpointStats>,
}

impl Dfg {
    pub fn node(&self, a: ActivityKind) -> Option<&NodeStats> {
        self.nodes.iter().find(|n| n.activity == a)
    }

    pub fn edge(&self, from: ActivityKind, to: ActivityKind) -> Option<&EdgeStats> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }
}

#[derive(Clone)]
struct Acc {
    cases: u64,
    node_cases: [u64; K],
    node_occ: [u64; K],
    edge_cases: [u64; K * K],
    edge_secs: Vec<Vec<i64>>,
    start: [u64; K],
    end: [u64; K],
}

impl Acc {
    fn new() -> Self {
        Acc {
            cases: 0,
            node_cases: [0; K],
            node_occ: [0; K],
            edge_cases: [0; K * K],
            edge_secs: vec![Vec::new(); K * K],
            start: [0; K],
            end: [0; K],
        }
    }

    fn add(mut self, t: &Trace) -> Self {
        self.cases += 1;
        let (Some(first), Some(last)) = (t.events.first(), t.events.last()) else {
            return self;
        };
        self.start[first.activity.index()] += 1;
        self.end[last.activity.index()] += 1;
        let mut node_seen = [false; K];
        let mut edge_seen = [false; K * K];
        for e in &t.events {
            let i = e.activity.index();
            self.node_occ[i] += 1;
            if !node_seen[i] {
                node_seen[i] = true;
                self.node_cases[i] += 1;
            }
        }
        for w in t.events.windows(2) {
            let j = w[0].activity.index() * K + w[1].activity.index();
            self.edge_secs[j].push(w[1].timestamp - w[0].timestamp);
            if !edge_seen[j] {
                edge_seen[j] = true;
                self.edge_cases[j] += 1;
            }
        }
        self
    }

    fn merge(mut self, other: Acc) -> Self {
        self.cases += other.cases;
        for i in 0..K {
            self.node_cases[i] += other.node_cases[i];
            self.node_occ[i] += other.node_occ[i];
            self.start[i] += other.start[i];
            self.end[i] += other.end[i];
        }
        for (j, secs) in other.edge_secs.into_iter().enumerate() {
            self.edge_cases[j] += other.edge_cases[j];
            self.edge_secs[j].extend(secs);
        }
        self
    }
}

/// Every consecutive event pair of a trace adds one occurrence to its edge;
/// each trace adds at most one to any node or edge case count.
pub fn mine_dfg(log: &EventLog) -> Dfg {
    let acc = log
        .traces
        .par_iter()
        .fold(Acc::new, Acc::add)
        .reduce(Acc::new, Acc::merge);
    let n = acc.cases;
    let mut edge_secs = acc.edge_secs;
    let mut dfg = Dfg {
        case_count: n,
        ..Default::default()
    };
    for a in ActivityKind::ALL {
        let i = a.index();
        if acc.node_occ[i] > 0 {
            dfg.nodes.push(NodeStats {
                activity: a,
                case_count: acc.node_cases[i],
                case_pct: rate(acc.node_cases[i], n),
                occurrences: acc.node_occ[i],
                median_self_loop_minutes: median_minutes(&mut edge_secs[i * K + i].clone()),
            });
        }
        for (endpoints, counts) in [(&mut dfg.start, &acc.start), (&mut dfg.end, &acc.end)] {
            if counts[i] > 0 {
                endpoints.push(EndpointStats {
                    activity: a,
                    case_count: counts[i],
                    case_pct: rate(counts[i], n),
                });
            }
        }
    }
    for from in ActivityKind::ALL {
        for to in ActivityKind::ALL {
            let j = from.index() * K + to.index();
            let secs = &mut edge_secs[j];
            if secs.is_empty() {
                continue;
            }
            dfg.edges.push(EdgeStats {
                from,
                to,
                case_count: acc.edge_cases[j],
                case_pct: rate(acc.edge_cases[j], n),
                occurrences: secs.len() as u64,
                median_minutes: median_minutes(secs),
            });
        }
    }
    dfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::Event;
    use crate::time::Timestamp;

    fn trace(id: i64, steps: &[(ActivityKind, i64)]) -> Trace {
        let mut t = Trace::new(id);
        let base = Timestamp::parse("2100-01-01 10:00:00").unwrap();
        t.events = steps.iter().map(|(a, s)| Event::new(*a, base + *s)).collect();
        t
    }

    #[test]
    fn three_step_trace() {
        use ActivityKind::*;
        let log = EventLog::new(vec![trace(1, &[(Enter, 0), (Triage, 1), (Discharge, 3601)])]);
        let dfg = mine_dfg(&log);
        assert_eq!(dfg.edges.len(), 2);
        let et = dfg.edge(Enter, Triage).unwrap();
        assert_eq!((et.occurrences, et.case_count), (1, 1));
        assert_eq!(et.median_minutes, Some(1.0 / 60.0));
        assert_eq!(dfg.edge(Triage, Discharge).unwrap().median_minutes, Some(60.0));
        assert_eq!(dfg.start[0].activity, Enter);
        assert_eq!(dfg.end[0].activity, Discharge);
    }

    #[test]
    fn repeated_edges_count_case_once() {
        use ActivityKind::*;
        let log = EventLog::new(vec![
            trace(1, &[(Enter, 0), (VitalSignCheck, 60), (VitalSignCheck, 120), (VitalSignCheck, 300), (Discharge, 400)]),
            trace(2, &[(Enter, 0), (Discharge, 10)]),
        ]);
        let dfg = mine_dfg(&log);
        let vv = dfg.edge(VitalSignCheck, VitalSignCheck).unwrap();
        assert_eq!((vv.occurrences, vv.case_count), (2, 1));
        assert_eq!(vv.case_pct, 50.0);
        assert_eq!(vv.median_minutes, Some(2.0));
        let v = dfg.node(VitalSignCheck).unwrap();
        assert_eq!((v.occurrences, v.case_count), (3, 1));
        assert_eq!(v.median_self_loop_minutes, Some(2.0));
        assert_eq!(dfg.start.iter().map(|s| s.case_count).sum::<u64>(), 2);
    }

    #[test]
    fn empty_log() {
        let dfg = mine_dfg(&EventLog::default());
        assert_eq!(dfg.case_count, 0);
        assert!(dfg.nodes.is_empty() && dfg.edges.is_empty());
    }
}
