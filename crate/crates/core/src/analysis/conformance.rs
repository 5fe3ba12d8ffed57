//! Expected-vs-unexpected relationship metrics against a causal template.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::dfg::{DirectlyFollowsGraph, END, START};
use crate::aceg::AggregatedCeg;
use crate::cpt::CausalProcessTemplate;

/// The template as edges between activity labels, framed by
/// [`START`] → source types and sink types → [`END`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedModel {
    pub activities: Vec<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl ExpectedModel {
    /// `labels` maps relation names to activity labels; unmapped relations
    /// keep their name.
    pub fn from_cpt(cpt: &CausalProcessTemplate, labels: &BTreeMap<String, String>) -> Self {
        let label = |r: &String| labels.get(r).cloned().unwrap_or_else(|| r.clone());
        let mut edges: BTreeSet<(String, String)> = cpt
            .causal_pairs()
            .iter()
            .map(|(a, b)| (label(a), label(b)))
            .collect();
        for s in cpt.sources() {
            edges.insert((START.to_string(), label(&s)));
        }
        for s in cpt.sinks() {
            edges.insert((label(&s), END.to_string()));
        }
        let order = cpt
            .topological_order()
            .unwrap_or_else(|| cpt.relations().iter().cloned().collect());
        let mut activities = vec![START.to_string()];
        for r in &order {
            let l = label(r);
            if !activities.contains(&l) {
                activities.push(l);
            }
        }
        activities.push(END.to_string());
        ExpectedModel { activities, edges }
    }

    pub fn is_expected(&self, from: &str, to: &str) -> bool {
        self.edges.contains(&(from.to_string(), to.to_string()))
    }
}

/// Quantities on activity-level edges, including Start/End edges.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FlowGraph {
    #[serde(serialize_with = "super::pair_counts")]
    pub counts: BTreeMap<(String, String), usize>,
}

impl FlowGraph {
    pub fn from_dfg(dfg: &DirectlyFollowsGraph) -> Self {
        FlowGraph {
            counts: dfg.counts.clone(),
        }
    }

    /// Type-edge quantities plus Start edges for events without causes and
    /// End edges for events without effects.
    pub fn from_aceg(aceg: &AggregatedCeg) -> Self {
        let mut counts = BTreeMap::new();
        for ((a, b), s) in &aceg.edges {
            counts.insert((a.clone(), b.clone()), s.quantity);
        }
        for (t, &n) in &aceg.start_quantity {
            counts.insert((START.to_string(), t.clone()), n);
        }
        for (t, &n) in &aceg.end_quantity {
            counts.insert((t.clone(), END.to_string()), n);
        }
        FlowGraph { counts }
    }

    pub fn count(&self, from: &str, to: &str) -> usize {
        self.counts
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }

    fn sources(&self) -> BTreeSet<&str> {
        self.counts.keys().map(|(a, _)| a.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceRow {
    pub source: String,
    /// Expected targets with their quantities.
    pub expected: Vec<(String, usize)>,
    /// Quantity of all edges out of `source` to non-expected targets.
    pub unexpected: usize,
    /// Non-expected targets with their quantities.
    pub unexpected_targets: Vec<(String, usize)>,
}

impl ConformanceRow {
    pub fn expected_total(&self) -> usize {
        self.expected.iter().map(|(_, n)| n).sum()
    }

    /// Unexpected over expected quantity, in percent.
    pub fn ratio_percent(&self) -> Option<f64> {
        ratio_percent(self.expected_total(), self.unexpected)
    }
}

pub fn ratio_percent(expected: usize, unexpected: usize) -> Option<f64> {
    (expected > 0).then(|| unexpected as f64 / expected as f64 * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceTable {
    /// Row/column order: Start, template activities, other observed
    /// activities, End.
    pub activities: Vec<String>,
    pub rows: Vec<ConformanceRow>,
    /// Violations grouped by expected type-pair (ACEG only).
    #[serde(serialize_with = "super::pair_counts")]
    pub violations: BTreeMap<(String, String), usize>,
}

impl ConformanceTable {
    pub fn row(&self, source: &str) -> Option<&ConformanceRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    pub fn unexpected_total(&self) -> usize {
        self.rows.iter().map(|r| r.unexpected).sum()
    }

    pub fn violation_total(&self) -> usize {
        self.violations.values().sum()
    }
}

/// Classifies every edge of `graph` against the model. `violations` are
/// per type-pair counts; only those on expected edges are kept.
pub fn conformance_table(
    graph: &FlowGraph,
    model: &ExpectedModel,
    violations: &BTreeMap<(String, String), usize>,
) -> ConformanceTable {
    let mut activities = model.activities.clone();
    let end = activities.pop();
    let observed: BTreeSet<&str> = graph
        .counts
        .keys()
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .collect();
    for a in observed {
        if !activities.iter().any(|x| x == a) && Some(a) != end.as_deref() {
            activities.push(a.to_string());
        }
    }
    activities.extend(end);

    let sources = graph.sources();
    let rows = activities
        .iter()
        .filter(|a| sources.contains(a.as_str()) || model.edges.iter().any(|(s, _)| s == *a))
        .map(|source| {
            let mut expected = Vec::new();
            let mut unexpected_targets = Vec::new();
            for ((_, to), &n) in graph
                .counts
                .range((source.clone(), String::new())..)
                .take_while(|((a, _), _)| a == source)
            {
                if model.is_expected(source, to) {
                    expected.push((to.clone(), n));
                } else {
                    unexpected_targets.push((to.clone(), n));
                }
            }
            for (s, to) in &model.edges {
                if s == source && !expected.iter().any(|(t, _)| t == to) {
                    expected.push((to.clone(), 0));
                }
            }
            expected.sort_by_key(|(t, _)| activities.iter().position(|a| a == t));
            let unexpected = unexpected_targets.iter().map(|(_, n)| n).sum();
            ConformanceRow {
                source: source.clone(),
                expected,
                unexpected,
                unexpected_targets,
            }
        })
        .collect();
    let violations = violations
        .iter()
        .filter(|((a, b), _)| model.is_expected(a, b))
        .map(|(k, &n)| (k.clone(), n))
        .collect();
    ConformanceTable {
        activities,
        rows,
        violations,
    }
}

/// Cumulative unexpected quantity plus violations on expected edges.
pub fn conformance_score(table: &ConformanceTable) -> usize {
    table.unexpected_total() + table.violation_total()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ExpectedModel {
        let cpt = CausalProcessTemplate::new(["a", "b"], [("a".to_string(), "b".to_string())]);
        ExpectedModel::from_cpt(&cpt, &BTreeMap::new())
    }

    #[test]
    fn ratio_formula() {
        let r = ratio_percent(69_438, 561).unwrap();
        assert_eq!(format!("{r:.2}"), "0.81");
        assert!(ratio_percent(0, 3).is_none());
    }

    #[test]
    fn expected_model_frames_template() {
        let m = model();
        assert!(m.is_expected(START, "a"));
        assert!(m.is_expected("a", "b"));
        assert!(m.is_expected("b", END));
        assert!(!m.is_expected("a", END));
        assert_eq!(m.activities, vec![START, "a", "b", END]);
    }

    #[test]
    fn classification_and_score() {
        let mut g = FlowGraph::default();
        for (a, b, n) in [
            (START, "a", 10),
            ("a", "b", 9),
            ("a", END, 1),
            ("b", "b", 5),
            ("b", "a", 7),
            ("b", END, 10),
        ] {
            g.counts.insert((a.into(), b.into()), n);
        }
        let t = conformance_table(&g, &model(), &BTreeMap::new());
        let a = t.row("a").unwrap();
        assert_eq!(a.expected, vec![("b".to_string(), 9)]);
        assert_eq!(a.unexpected, 1);
        let b = t.row("b").unwrap();
        assert_eq!(b.unexpected, 12);
        assert_eq!(conformance_score(&t), 13);

        let violations = BTreeMap::from([
            (("a".to_string(), "b".to_string()), 2),
            (("b".to_string(), "a".to_string()), 4),
        ]);
        let t = conformance_table(&g, &model(), &violations);
        assert_eq!(conformance_score(&t), 15);
    }

    #[test]
    fn conforming_graph_scores_zero() {
        let mut g = FlowGraph::default();
        for (a, b) in [(START, "a"), ("a", "b"), ("b", END)] {
            g.counts.insert((a.into(), b.into()), 3);
        }
        let t = conformance_table(&g, &model(), &BTreeMap::new());
        assert!(t
            .rows
            .iter()
            .all(|r| r.unexpected == 0 && r.ratio_percent() == Some(0.0)));
        assert_eq!(conformance_score(&t), 0);
    }

    #[test]
    fn tables_serialize_to_json() {
        let g = FlowGraph {
            counts: BTreeMap::from([(("a".to_string(), "b".to_string()), 4)]),
        };
        let v = BTreeMap::from([(("a".to_string(), "b".to_string()), 1)]);
        let t = conformance_table(&g, &model(), &v);
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(
            json["violations"],
            serde_json::json!([{ "source": "a", "target": "b", "count": 1 }])
        );
    }
}
