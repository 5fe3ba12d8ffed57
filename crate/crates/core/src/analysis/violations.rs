use std::collections::BTreeMap;

use serde::Serialize;

use crate::ceg::{CegView, EventDatabase, EventIdx};
use crate::time::Micros;

/// A causal edge whose cause is strictly later than its effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemporalViolation {
    pub cause: String,
    pub effect: String,
    pub cause_type: String,
    pub effect_type: String,
    pub cause_timestamp: Micros,
    pub effect_timestamp: Micros,
}

fn violation(db: &EventDatabase, a: EventIdx, b: EventIdx) -> Option<TemporalViolation> {
    (db.timestamp(a) > db.timestamp(b)).then(|| TemporalViolation {
        cause: db.id(a),
        effect: db.id(b),
        cause_type: db.label(a).to_string(),
        effect_type: db.label(b).to_string(),
        cause_timestamp: db.timestamp(a),
        effect_timestamp: db.timestamp(b),
    })
}

/// Violating edges of the whole database, in edge order.
pub fn temporal_violations(db: &EventDatabase) -> Vec<TemporalViolation> {
    db.edges()
        .iter()
        .filter_map(|&(a, b)| violation(db, a, b))
        .collect()
}

pub fn temporal_violations_in(db: &EventDatabase, view: &CegView) -> Vec<TemporalViolation> {
    view.edges
        .iter()
        .filter_map(|&(a, b)| violation(db, a, b))
        .collect()
}

/// Violations grouped by (cause type, effect type).
pub fn violation_counts(violations: &[TemporalViolation]) -> BTreeMap<(String, String), usize> {
    let mut counts = BTreeMap::new();
    for v in violations {
        *counts
            .entry((v.cause_type.clone(), v.effect_type.clone()))
            .or_default() += 1;
    }
    counts
}
