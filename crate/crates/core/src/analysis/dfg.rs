use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ceg::EventDatabase;
use crate::error::Result;
use crate::time::Micros;

pub const START: &str = "Start";
pub const END: &str = "End";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LogRow {
    pub case: String,
    pub timestamp: Micros,
    /// Event id; breaks timestamp ties.
    pub event: String,
    pub activity: String,
}

/// Rows sorted by (case, timestamp, event id).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EventLog {
    pub rows: Vec<LogRow>,
}

impl EventLog {
    pub fn new(mut rows: Vec<LogRow>) -> Self {
        rows.sort();
        EventLog { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Activity sequences per case, in case order.
    pub fn traces(&self) -> impl Iterator<Item = (&str, Vec<&str>)> {
        self.rows.chunk_by(|a, b| a.case == b.case).map(|chunk| {
            (
                chunk[0].case.as_str(),
                chunk.iter().map(|r| r.activity.as_str()).collect(),
            )
        })
    }
}

/// One case per key of `root`; each case holds the events of its case
/// projection, so shared events appear in several cases.
pub fn flatten_to_event_log(db: &EventDatabase, root: &str) -> Result<EventLog> {
    let mut rows = Vec::new();
    for view in db.case_projection(root)? {
        let case = view.id();
        rows.extend(view.events.iter().map(|&e| LogRow {
            case: case.clone(),
            timestamp: db.timestamp(e),
            event: db.id(e),
            activity: db.label(e).to_string(),
        }));
    }
    Ok(EventLog::new(rows))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DirectlyFollowsGraph {
    /// Activities including [`START`] and [`END`] when the log is non-empty.
    pub activities: BTreeSet<String>,
    #[serde(serialize_with = "super::pair_counts")]
    pub counts: BTreeMap<(String, String), usize>,
}

impl DirectlyFollowsGraph {
    pub fn count(&self, from: &str, to: &str) -> usize {
        self.counts
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn self_loops(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts
            .iter()
            .filter(|((a, b), _)| a == b)
            .map(|((a, _), &n)| (a.as_str(), n))
    }
}

pub fn mine_dfg(log: &EventLog) -> DirectlyFollowsGraph {
    let mut dfg = DirectlyFollowsGraph::default();
    for (_, trace) in log.traces() {
        let path = std::iter::once(START)
            .chain(trace.iter().copied())
            .chain(std::iter::once(END));
        let path: Vec<&str> = path.collect();
        for w in path.windows(2) {
            *dfg.counts
                .entry((w[0].to_string(), w[1].to_string()))
                .or_default() += 1;
        }
        dfg.activities.extend(path.iter().map(|a| a.to_string()));
    }
    dfg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(cases: &[(&str, &[&str])]) -> EventLog {
        let mut rows = Vec::new();
        for (case, acts) in cases {
            for (i, a) in acts.iter().enumerate() {
                rows.push(LogRow {
                    case: case.to_string(),
                    timestamp: i as Micros,
                    event: format!("{case}-{i}"),
                    activity: a.to_string(),
                });
            }
        }
        EventLog::new(rows)
    }

    #[test]
    fn spurious_relations_of_a_repeated_trace() {
        let dfg = mine_dfg(&log(&[("c", &["a", "b", "c", "b", "b", "c", "c"])]));
        assert_eq!(dfg.count("b", "b"), 1);
        assert_eq!(dfg.count("c", "b"), 1);
        assert_eq!(dfg.count("c", "c"), 1);
        assert_eq!(dfg.count("b", "c"), 2);
        assert_eq!(dfg.count(START, "a"), 1);
        assert_eq!(dfg.count("c", END), 1);
    }

    #[test]
    fn single_event_case() {
        let dfg = mine_dfg(&log(&[("c", &["x"])]));
        assert_eq!(dfg.counts.len(), 2);
        assert_eq!(dfg.count(START, "x"), 1);
        assert_eq!(dfg.count("x", END), 1);
    }

    #[test]
    fn empty_log() {
        let dfg = mine_dfg(&EventLog::default());
        assert!(dfg.counts.is_empty() && dfg.activities.is_empty());
    }

    #[test]
    fn ties_broken_by_event_id() {
        let rows = vec![
            LogRow {
                case: "c".into(),
                timestamp: 5,
                event: "r:b".into(),
                activity: "B".into(),
            },
            LogRow {
                case: "c".into(),
                timestamp: 5,
                event: "r:a".into(),
                activity: "A".into(),
            },
        ];
        let l = EventLog::new(rows);
        assert_eq!(l.traces().next().unwrap().1, vec!["A", "B"]);
    }
}
