//! KPIs, temporal violations, the directly-follows baseline and
//! conformance metrics.

pub mod conformance;
pub mod dfg;
pub mod kpi;
pub mod violations;

pub use conformance::{
    conformance_score, conformance_table, ratio_percent, ConformanceRow, ConformanceTable,
    ExpectedModel, FlowGraph,
};
pub use dfg::{flatten_to_event_log, mine_dfg, DirectlyFollowsGraph, EventLog, LogRow, END, START};
pub use kpi::{
    batching_type_distribution, ceg_cycle_stats, end_event_distribution, event_type_cycle_stats,
    fragment_cycle_stats, CycleTimeStats, Share,
};
pub use violations::{
    temporal_violations, temporal_violations_in, violation_counts, TemporalViolation,
};

/// JSON object keys must be strings, so pair-keyed counts are written as
/// `[{"source", "target", "count"}]`.
pub(crate) fn pair_counts<S: serde::Serializer>(
    map: &std::collections::BTreeMap<(String, String), usize>,
    s: S,
) -> Result<S::Ok, S::Error> {
    #[derive(serde::Serialize)]
    struct Entry<'a> {
        source: &'a str,
        target: &'a str,
        count: usize,
    }
    s.collect_seq(map.iter().map(|((a, b), &count)| Entry {
        source: a,
        target: b,
        count,
    }))
}
