//! End-to-end steps shared by the command-line driver and tests:
//! load → validate → join → build, and the analyses on top.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::aceg::{aggregate_level3, AggregatedCeg};
use crate::analysis::{
    batching_type_distribution, ceg_cycle_stats, conformance_score, conformance_table,
    end_event_distribution, event_type_cycle_stats, flatten_to_event_log, fragment_cycle_stats,
    mine_dfg, temporal_violations, violation_counts, ConformanceTable, CycleTimeStats,
    DirectlyFollowsGraph, ExpectedModel, FlowGraph, Share,
};
use crate::catalog::{
    left_outer_join, load_catalog, validate_catalog, CausallyConnectedTuple, Dataset, JoinPlan,
};
use crate::ceg::{CegView, EventDatabase};
use crate::config::{CptDocument, RunConfig};
use crate::cpt::{validate_cpt, CausalProcessTemplate};
use crate::error::{Error, Result};
use crate::report::ValidationReport;

pub struct Built {
    pub dataset: Dataset,
    pub plan: JoinPlan,
    pub cpt: CausalProcessTemplate,
    pub tuples: Vec<CausallyConnectedTuple>,
    pub db: EventDatabase,
    /// Non-fatal findings of catalog and template validation.
    pub warnings: ValidationReport,
}

pub fn build(config: &RunConfig) -> Result<Built> {
    let mut source = config.source.clone();
    source.dir = Some(config.source_dir());
    let dataset = load_catalog(&source)?;
    build_from_dataset(dataset, &config.source.root, config.cpt.as_ref())
}

/// Validates the catalog and template, joins the template's relations
/// (all relations when no template is given) and builds the database.
pub fn build_from_dataset(
    dataset: Dataset,
    root: &str,
    cpt: Option<&CptDocument>,
) -> Result<Built> {
    let mut report = validate_catalog(dataset.catalog());
    if report.has_errors() {
        return Err(Error::Validation(report));
    }
    let catalog = dataset.catalog();
    let (plan, cpt) = match cpt {
        Some(doc) => {
            let (cpt, issues) = CausalProcessTemplate::from_document(doc, Some(catalog))?;
            for i in issues {
                report.push(i);
            }
            let relations: Vec<String> = cpt.relations().iter().cloned().collect();
            (JoinPlan::derive(catalog, &relations, root)?, cpt)
        }
        None => {
            let relations: Vec<String> = catalog.schemas().iter().map(|s| s.name.clone()).collect();
            let plan = JoinPlan::derive(catalog, &relations, root)?;
            let cpt = CausalProcessTemplate::from_join_plan(catalog, &plan);
            (plan, cpt)
        }
    };
    report.extend(validate_cpt(&cpt, catalog));
    if report.has_errors() {
        return Err(Error::Validation(report));
    }
    let tuples = left_outer_join(&dataset, &plan);
    let root_name = catalog.schemas()[plan.root].name.clone();
    let db = EventDatabase::build(&dataset, &tuples, &cpt, &root_name)?;
    Ok(Built {
        dataset,
        plan,
        cpt,
        tuples,
        db,
        warnings: report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BuildSummary {
    pub events: usize,
    pub edges: usize,
    pub fragments: usize,
    pub components: usize,
    pub projections: usize,
}

impl BuildSummary {
    pub fn of(db: &EventDatabase, projection_root: &str) -> Result<Self> {
        Ok(BuildSummary {
            events: db.len(),
            edges: db.edges().len(),
            fragments: db.fragments().len(),
            components: db.components().len(),
            projections: db.case_projection(projection_root)?.len(),
        })
    }
}

impl fmt::Display for BuildSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} events, {} edges, {} fragments, {} components, {} projections",
            self.events, self.edges, self.fragments, self.components, self.projections
        )
    }
}

/// Relation name → event-type label.
pub fn labels(db: &EventDatabase) -> BTreeMap<String, String> {
    db.relations()
        .iter()
        .map(|r| (r.name.clone(), r.label.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiReport {
    /// Per event type; `None` when the type has no samples.
    pub event_type_cycle_time: BTreeMap<String, Option<CycleTimeStats>>,
    pub ceg_cycle_time: Option<CycleTimeStats>,
    pub fragment_cycle_time: Option<CycleTimeStats>,
    pub end_events: BTreeMap<String, Share>,
    pub batching_types: BTreeMap<String, Share>,
}

pub fn kpi_report(db: &EventDatabase, views: &[CegView], exclude_start_events: bool) -> KpiReport {
    let level3 = aggregate_level3(db, views);
    let event_type_cycle_time = level3
        .types
        .keys()
        .map(|t| {
            (
                t.clone(),
                event_type_cycle_stats(db, views, t, exclude_start_events),
            )
        })
        .collect();
    KpiReport {
        event_type_cycle_time,
        ceg_cycle_time: ceg_cycle_stats(db, views),
        fragment_cycle_time: fragment_cycle_stats(db),
        end_events: end_event_distribution(&level3),
        batching_types: batching_type_distribution(db),
    }
}

/// The directly-follows baseline and the level-3 ACEG of the same data,
/// both classified against the template.
pub struct Comparison {
    pub dfg: DirectlyFollowsGraph,
    pub aceg: AggregatedCeg,
    pub dfg_table: ConformanceTable,
    pub aceg_table: ConformanceTable,
    pub dfg_score: usize,
    pub aceg_score: usize,
}

pub fn compare(
    db: &EventDatabase,
    cpt: &CausalProcessTemplate,
    projection_root: &str,
) -> Result<Comparison> {
    let model = ExpectedModel::from_cpt(cpt, &labels(db));
    let log = flatten_to_event_log(db, projection_root)?;
    let dfg = mine_dfg(&log);
    let views = db.case_projection(projection_root)?;
    let aceg = aggregate_level3(db, &views);
    let dfg_table = conformance_table(&FlowGraph::from_dfg(&dfg), &model, &BTreeMap::new());
    let counts = violation_counts(&temporal_violations(db));
    let aceg_table = conformance_table(&FlowGraph::from_aceg(&aceg), &model, &counts);
    Ok(Comparison {
        dfg_score: conformance_score(&dfg_table),
        aceg_score: conformance_score(&aceg_table),
        dfg,
        aceg,
        dfg_table,
        aceg_table,
    })
}
