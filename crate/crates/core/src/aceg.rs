//! Aggregated causal event graphs: event-type quantities, type-edge
//! quantities and min/max in/out cardinalities, at three levels of
//! aggregation (per view, per structure class, everything).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::ceg::{CegView, EventDatabase, EventIdx};

pub type TypeEdge = (String, String);

/// Inclusive `(min, max)` range.
pub type Range = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeStats {
    pub quantity: usize,
    /// Incoming cardinality range over target-typed events.
    pub card_in: Range,
    /// Outgoing cardinality range over source-typed events.
    pub card_out: Range,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AggregatedCeg {
    /// Type label → number of distinct events.
    pub types: BTreeMap<String, usize>,
    pub edges: BTreeMap<TypeEdge, EdgeStats>,
    /// Events per type without causes inside the aggregated events.
    pub start_quantity: BTreeMap<String, usize>,
    /// Events per type without effects inside the aggregated events.
    pub end_quantity: BTreeMap<String, usize>,
    /// Ids of the contributing views.
    pub source_views: BTreeSet<String>,
}

impl AggregatedCeg {
    pub fn event_types(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn type_edges(&self) -> impl Iterator<Item = &TypeEdge> {
        self.edges.keys()
    }

    pub fn quantity(&self, label: &str) -> usize {
        self.types.get(label).copied().unwrap_or(0)
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&EdgeStats> {
        self.edges.get(&(from.to_string(), to.to_string()))
    }

    /// Types without outgoing type-edges.
    pub fn sink_types(&self) -> Vec<&str> {
        self.types
            .keys()
            .filter(|t| !self.edges.keys().any(|(a, _)| a == *t))
            .map(String::as_str)
            .collect()
    }

    fn structure(&self) -> (Vec<&str>, Vec<&TypeEdge>) {
        (
            self.types.keys().map(String::as_str).collect(),
            self.edges.keys().collect(),
        )
    }
}

/// `|{e ∈ S : τ(e) = λ}|`.
pub fn type_quantity(db: &EventDatabase, events: &[EventIdx], label: &str) -> usize {
    events.iter().filter(|&&e| db.label(e) == label).count()
}

/// Number of distinct edges from `from`-typed to `to`-typed events.
pub fn edge_quantity(
    db: &EventDatabase,
    edges: &[(EventIdx, EventIdx)],
    from: &str,
    to: &str,
) -> usize {
    edges
        .iter()
        .filter(|&&(a, b)| db.label(a) == from && db.label(b) == to)
        .count()
}

/// Edges leaving `v` into `label`-typed events.
pub fn out_degree(
    db: &EventDatabase,
    v: EventIdx,
    label: &str,
    edges: &[(EventIdx, EventIdx)],
) -> u32 {
    edges
        .iter()
        .filter(|&&(a, b)| a == v && db.label(b) == label)
        .count() as u32
}

/// Edges entering `w` from `label`-typed events.
pub fn in_degree(
    db: &EventDatabase,
    label: &str,
    w: EventIdx,
    edges: &[(EventIdx, EventIdx)],
) -> u32 {
    edges
        .iter()
        .filter(|&&(a, b)| b == w && db.label(a) == label)
        .count() as u32
}

fn min_max(values: impl Iterator<Item = u32>) -> Option<Range> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Min/max `out_degree(v, to)` over the `from`-typed events of the view;
/// `None` without such events.
pub fn min_max_out(db: &EventDatabase, view: &CegView, from: &str, to: &str) -> Option<Range> {
    min_max(
        view.events
            .iter()
            .filter(|&&e| db.label(e) == from)
            .map(|&v| out_degree(db, v, to, &view.edges)),
    )
}

/// Min/max `in_degree(from, w)` over the `to`-typed events of the view;
/// `None` without such events.
pub fn min_max_in(db: &EventDatabase, view: &CegView, from: &str, to: &str) -> Option<Range> {
    min_max(
        view.events
            .iter()
            .filter(|&&e| db.label(e) == to)
            .map(|&w| in_degree(db, from, w, &view.edges)),
    )
}

/// Per-type-edge degree ranges of one view, computed in a single pass over
/// its edges. Keys are type-edges witnessed in the view.
struct ViewDegrees {
    /// (from, to) → (min out over all from-typed events, max out)
    out: HashMap<TypeEdge, Range>,
    /// (from, to) → (min in over to-typed events, max in)
    inc: HashMap<TypeEdge, Range>,
    /// Labels present in the view with their event counts.
    type_counts: BTreeMap<String, usize>,
}

fn view_degrees(db: &EventDatabase, view: &CegView) -> ViewDegrees {
    let mut type_counts: BTreeMap<String, usize> = BTreeMap::new();
    for &e in &view.events {
        *type_counts.entry(db.label(e).to_string()).or_default() += 1;
    }
    let mut out_counts: HashMap<(EventIdx, &str), u32> = HashMap::new();
    let mut in_counts: HashMap<(&str, EventIdx), u32> = HashMap::new();
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for &(a, b) in &view.edges {
        *out_counts.entry((a, db.label(b))).or_default() += 1;
        *in_counts.entry((db.label(a), b)).or_default() += 1;
        pairs.insert((db.label(a), db.label(b)));
    }
    let mut out = HashMap::new();
    let mut inc = HashMap::new();
    for &(from, to) in &pairs {
        let o = min_max(
            view.events
                .iter()
                .filter(|&&e| db.label(e) == from)
                .map(|&v| out_counts.get(&(v, to)).copied().unwrap_or(0)),
        );
        let i = min_max(
            view.events
                .iter()
                .filter(|&&e| db.label(e) == to)
                .map(|&w| in_counts.get(&(from, w)).copied().unwrap_or(0)),
        );
        let key = (from.to_string(), to.to_string());
        out.insert(key.clone(), o.expect("witnessed edge has a source event"));
        inc.insert(key, i.expect("witnessed edge has a target event"));
    }
    ViewDegrees {
        out,
        inc,
        type_counts,
    }
}

fn merge_range(a: Option<Range>, b: Range) -> Option<Range> {
    Some(match a {
        None => b,
        Some((lo, hi)) => (lo.min(b.0), hi.max(b.1)),
    })
}

/// Aggregates a group of views: quantities over the distinct union of their
/// events and edges, cardinality ranges merged per view. A view holding
/// source-typed events of a merged type-edge but none of its edges
/// contributes an out-degree of 0.
fn aggregate_group(db: &EventDatabase, views: &[&CegView]) -> AggregatedCeg {
    let degrees: Vec<ViewDegrees> = views.par_iter().map(|v| view_degrees(db, v)).collect();

    let mut events: Vec<EventIdx> = views
        .iter()
        .flat_map(|v| v.events.iter().copied())
        .collect();
    events.sort_unstable();
    events.dedup();
    let mut edges: Vec<(EventIdx, EventIdx)> =
        views.iter().flat_map(|v| v.edges.iter().copied()).collect();
    edges.sort_unstable();
    edges.dedup();

    let mut agg = AggregatedCeg::default();
    for &e in &events {
        *agg.types.entry(db.label(e).to_string()).or_default() += 1;
    }
    let mut quantities: BTreeMap<TypeEdge, usize> = BTreeMap::new();
    let mut has_cause = vec![false; events.len()];
    let mut has_effect = vec![false; events.len()];
    for &(a, b) in &edges {
        *quantities
            .entry((db.label(a).to_string(), db.label(b).to_string()))
            .or_default() += 1;
        // Both endpoints are in `events`: view edges are induced.
        has_effect[events.binary_search(&a).unwrap()] = true;
        has_cause[events.binary_search(&b).unwrap()] = true;
    }
    for (i, &e) in events.iter().enumerate() {
        if !has_cause[i] {
            *agg.start_quantity
                .entry(db.label(e).to_string())
                .or_default() += 1;
        }
        if !has_effect[i] {
            *agg.end_quantity.entry(db.label(e).to_string()).or_default() += 1;
        }
    }

    for (edge, quantity) in quantities {
        let mut card_in = None;
        let mut card_out = None;
        for d in &degrees {
            if let Some(&r) = d.inc.get(&edge) {
                card_in = merge_range(card_in, r);
            }
            match d.out.get(&edge) {
                Some(&r) => card_out = merge_range(card_out, r),
                None if d.type_counts.contains_key(&edge.0) => {
                    card_out = merge_range(card_out, (0, 0))
                }
                None => {}
            }
        }
        let stats = EdgeStats {
            quantity,
            card_in: card_in.expect("edge witnessed in some view"),
            card_out: card_out.expect("edge witnessed in some view"),
        };
        agg.edges.insert(edge, stats);
    }
    agg.source_views = views.iter().map(|v| v.id()).collect();
    agg
}

/// One ACEG for a single view.
pub fn aggregate_level1(db: &EventDatabase, view: &CegView) -> AggregatedCeg {
    aggregate_group(db, &[view])
}

/// Same event types, type-edges and labels. Labels are the type identity,
/// so comparing types and type-edges suffices.
pub fn structurally_equal(a: &AggregatedCeg, b: &AggregatedCeg) -> bool {
    a.structure() == b.structure()
}

/// Groups views by the structure of their level-1 ACEGs and aggregates each
/// group. Groups are ordered by their structure.
pub fn aggregate_level2(db: &EventDatabase, views: &[CegView]) -> Vec<AggregatedCeg> {
    let level1: Vec<AggregatedCeg> = views.par_iter().map(|v| aggregate_level1(db, v)).collect();
    let mut classes: BTreeMap<(Vec<&str>, Vec<&TypeEdge>), Vec<&CegView>> = BTreeMap::new();
    for (view, agg) in views.iter().zip(&level1) {
        classes.entry(agg.structure()).or_default().push(view);
    }
    classes
        .into_values()
        .map(|group| aggregate_group(db, &group))
        .collect()
}

/// A single ACEG over all views.
pub fn aggregate_level3(db: &EventDatabase, views: &[CegView]) -> AggregatedCeg {
    let refs: Vec<&CegView> = views.iter().collect();
    aggregate_group(db, &refs)
}
