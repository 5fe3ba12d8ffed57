use std::collections::BTreeMap;

use serde::Serialize;

use crate::aceg::AggregatedCeg;
use crate::ceg::{CegView, EventDatabase};
use crate::time::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleTimeStats {
    pub min: Micros,
    pub avg: f64,
    pub max: Micros,
    pub count: usize,
}

impl CycleTimeStats {
    /// `None` for an empty sample.
    pub fn from_samples(samples: impl IntoIterator<Item = Micros>) -> Option<Self> {
        let mut min = Micros::MAX;
        let mut max = Micros::MIN;
        let mut sum: i128 = 0;
        let mut count = 0usize;
        for s in samples {
            min = min.min(s);
            max = max.max(s);
            sum += s as i128;
            count += 1;
        }
        (count > 0).then(|| CycleTimeStats {
            min,
            avg: sum as f64 / count as f64,
            max,
            count,
        })
    }
}

/// Absolute count and share of the total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Share {
    pub absolute: usize,
    pub relative: f64,
}

fn shares(counts: BTreeMap<String, usize>) -> BTreeMap<String, Share> {
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(k, absolute)| {
            (
                k,
                Share {
                    absolute,
                    relative: absolute as f64 / total as f64,
                },
            )
        })
        .collect()
}

/// Cycle times of all `label`-typed events of every view, causes taken
/// within the view. An event in several views is sampled once per view.
/// With `exclude_start_events`, events without causes in the view are
/// skipped instead of contributing 0.
pub fn event_type_cycle_stats(
    db: &EventDatabase,
    views: &[CegView],
    label: &str,
    exclude_start_events: bool,
) -> Option<CycleTimeStats> {
    CycleTimeStats::from_samples(views.iter().flat_map(|view| {
        view.events
            .iter()
            .copied()
            .filter(move |&e| db.label(e) == label)
            .filter(move |&e| !exclude_start_events || view.preset(e).next().is_some())
            .map(move |e| db.cycle_time_in(view, e))
    }))
}

fn span(db: &EventDatabase, view: &CegView) -> Option<Micros> {
    let times = view.events.iter().map(|&e| db.timestamp(e));
    Some(times.clone().max()? - times.min()?)
}

/// Stats over per-view spans (latest minus earliest timestamp).
pub fn ceg_cycle_stats(db: &EventDatabase, views: &[CegView]) -> Option<CycleTimeStats> {
    CycleTimeStats::from_samples(views.iter().filter_map(|v| span(db, v)))
}

/// [`ceg_cycle_stats`] over the fragments of the database.
pub fn fragment_cycle_stats(db: &EventDatabase) -> Option<CycleTimeStats> {
    CycleTimeStats::from_samples(db.fragments().iter().filter_map(|f| {
        let times = f.events.iter().map(|&e| db.timestamp(e));
        Some(times.clone().max()? - times.min()?)
    }))
}

/// Quantities of the types without outgoing type-edges.
pub fn end_event_distribution(aggregated: &AggregatedCeg) -> BTreeMap<String, Share> {
    shares(
        aggregated
            .sink_types()
            .into_iter()
            .map(|t| (t.to_string(), aggregated.quantity(t)))
            .collect(),
    )
}

/// Types of the batching events.
pub fn batching_type_distribution(db: &EventDatabase) -> BTreeMap<String, Share> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for e in db.batching_events() {
        *counts.entry(db.label(e).to_string()).or_default() += 1;
    }
    shares(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_arithmetic() {
        let s = CycleTimeStats::from_samples([60, 20]).unwrap();
        assert_eq!((s.min, s.avg, s.max, s.count), (20, 40.0, 60, 2));
        let s = CycleTimeStats::from_samples([7]).unwrap();
        assert_eq!((s.min, s.avg, s.max), (7, 7.0, 7));
        assert!(CycleTimeStats::from_samples([]).is_none());
    }

    #[test]
    fn share_arithmetic() {
        let s = shares(BTreeMap::from([
            ("RS".to_string(), 2),
            ("PI".to_string(), 1),
        ]));
        assert_eq!(s["RS"].absolute, 2);
        assert!((s["RS"].relative - 2.0 / 3.0).abs() < 1e-12);
        assert!((s["PI"].relative - 1.0 / 3.0).abs() < 1e-12);
        assert!(shares(BTreeMap::new()).is_empty());
    }
}
