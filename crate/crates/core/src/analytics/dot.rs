//! Graphviz rendering of a [`Dfg`].

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::dfg::Dfg;
use crate::activity::ActivityKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Annotation {
    Frequency,
    Duration,
    #[default]
    Both,
}

impl std::str::FromStr for Annotation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "frequency" => Ok(Annotation::Frequency),
            "duration" => Ok(Annotation::Duration),
            "both" => Ok(Annotation::Both),
            _ => Err(format!("unknown annotation {s:?}; use frequency, duration or both")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DotOptions {
    /// Edges covering fewer cases than this share are left out. Nodes stay.
    pub min_edge_coverage_pct: f64,
    pub annotation: Annotation,
}

fn node_id(a: ActivityKind) -> String {
    format!("a{}", a.index())
}

fn duration_label(minutes: Option<f64>) -> String {
    match minutes {
        None => "n/a".into(),
        Some(m) if m >= 120.0 => format!("{:.1} h", m / 60.0),
        Some(m) if m >= 1.0 => format!("{m:.0} min"),
        Some(m) => format!("{:.0} s", m * 60.0),
    }
}

pub fn export_dot(dfg: &Dfg, options: &DotOptions) -> String {
    let mut out = String::new();
    out.push_str("digraph dfg {\n");
    out.push_str("\trankdir=TB;\n");
    out.push_str("\tnode [shape=box, style=\"rounded,filled\", fillcolor=\"#dbe8f5\", fontname=\"Helvetica\"];\n");
    out.push_str("\tedge [fontname=\"Helvetica\", fontsize=10];\n");
    if dfg.case_count == 0 {
        out.push_str("}\n");
        return out;
    }
    out.push_str("\tstart [label=\"\", shape=triangle, style=filled, fillcolor=\"#6aa84f\", width=0.4];\n");
    out.push_str("\tend [label=\"\", shape=octagon, style=filled, fillcolor=\"#cc0000\", width=0.4];\n");
    for n in &dfg.nodes {
        let _ = writeln!(
            out,
            "\t{} [label=\"{}\\n{:.2}% of cases\"];",
            node_id(n.activity),
            n.activity.name(),
            n.case_pct
        );
    }
    let keep = |pct: f64| pct >= options.min_edge_coverage_pct;
    for s in dfg.start.iter().filter(|s| keep(s.case_pct)) {
        let _ = writeln!(
            out,
            "\tstart -> {} [style=dashed, label=\"{:.2}%\"];",
            node_id(s.activity),
            s.case_pct
        );
    }
    for e in dfg.edges.iter().filter(|e| keep(e.case_pct)) {
        let label = match options.annotation {
            Annotation::Frequency => format!("{:.2}% ({})", e.case_pct, e.occurrences),
            Annotation::Duration => duration_label(e.median_minutes),
            Annotation::Both => format!(
                "{:.2}% ({})\\n{}",
                e.case_pct,
                e.occurrences,
                duration_label(e.median_minutes)
            ),
        };
        let width = 1.0 + 4.0 * e.case_pct / 100.0;
        let _ = writeln!(
            out,
            "\t{} -> {} [label=\"{label}\", penwidth={width:.2}];",
            node_id(e.from),
            node_id(e.to)
        );
    }
    for s in dfg.end.iter().filter(|s| keep(s.case_pct)) {
        let _ = writeln!(
            out,
            "\t{} -> end [style=dashed, label=\"{:.2}%\"];",
            node_id(s.activity),
            s.case_pct
        );
    }
    out.push_str("}\n");
    out
}
