use std::collections::BTreeMap;
use std::fmt::Write;

use crate::aceg::AggregatedCeg;
use crate::ceg::{CegView, EventDatabase, EventIdx};
use crate::time::Micros;

pub const GREEN: &str = "palegreen";
pub const ORANGE: &str = "orange";
pub const RED: &str = "tomato";

/// Traffic-light cutoffs: cycle time `<= green_max` is green,
/// `<= orange_max` orange, anything above red.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleTimeColors {
    pub green_max: Micros,
    pub orange_max: Micros,
}

impl CycleTimeColors {
    pub fn new([green_max, orange_max]: [Micros; 2]) -> Self {
        CycleTimeColors {
            green_max,
            orange_max,
        }
    }

    /// Empirical tertiles of the samples; `None` for no samples.
    pub fn tertiles(samples: &[Micros]) -> Option<Self> {
        let mut s = samples.to_vec();
        s.sort_unstable();
        let at = |q: usize| s[((s.len() - 1) * q) / 3];
        (!s.is_empty()).then(|| CycleTimeColors {
            green_max: at(1),
            orange_max: at(2),
        })
    }

    pub fn color(&self, cycle_time: Micros) -> &'static str {
        if cycle_time <= self.green_max {
            GREEN
        } else if cycle_time <= self.orange_max {
            ORANGE
        } else {
            RED
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// A view with nodes coloured by cycle time and violating edges in red.
/// Without explicit thresholds the tertiles of the view's cycle times are
/// used.
pub fn ceg_to_dot(
    db: &EventDatabase,
    view: &CegView,
    thresholds: Option<CycleTimeColors>,
) -> String {
    let times: Vec<(EventIdx, Micros)> = view
        .events
        .iter()
        .map(|&e| (e, db.cycle_time_in(view, e)))
        .collect();
    let samples: Vec<Micros> = times.iter().map(|&(_, t)| t).collect();
    let colors = thresholds.or_else(|| CycleTimeColors::tertiles(&samples));
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&view.id())).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box, style=filled];").unwrap();
    for (e, ct) in times {
        let color = colors.map_or(GREEN, |c| c.color(ct));
        let label = format!("{}\n{}", db.id(e), db.label(e));
        writeln!(
            out,
            "  {} [label={}, fillcolor={}];",
            quote(&db.id(e)),
            quote(&label),
            quote(color)
        )
        .unwrap();
    }
    for &(a, b) in &view.edges {
        let attrs = if db.timestamp(a) > db.timestamp(b) {
            " [color=\"red\", penwidth=2]"
        } else {
            ""
        };
        writeln!(
            out,
            "  {} -> {}{};",
            quote(&db.id(a)),
            quote(&db.id(b)),
            attrs
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Nodes labelled `label\n(quantity)`, edges `in..in : out..out (q)`.
/// Type-edges with violations are drawn red.
pub fn aceg_to_dot(
    aceg: &AggregatedCeg,
    name: &str,
    violations: &BTreeMap<(String, String), usize>,
) -> String {
    let ids: BTreeMap<&str, String> = aceg
        .types
        .keys()
        .enumerate()
        .map(|(i, t)| (t.as_str(), format!("t{i}")))
        .collect();
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box, style=rounded];").unwrap();
    for (label, q) in &aceg.types {
        writeln!(
            out,
            "  {} [label={}];",
            ids[label.as_str()],
            quote(&format!("{label}\n({q})"))
        )
        .unwrap();
    }
    for ((a, b), s) in &aceg.edges {
        let label = format!(
            "{}..{} : {}..{} ({})",
            s.card_in.0, s.card_in.1, s.card_out.0, s.card_out.1, s.quantity
        );
        let red = violations
            .get(&(a.clone(), b.clone()))
            .is_some_and(|&n| n > 0);
        let color = if red { ", color=\"red\"" } else { "" };
        writeln!(
            out,
            "  {} -> {} [label={}{}];",
            ids[a.as_str()],
            ids[b.as_str()],
            quote(&label),
            color
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
