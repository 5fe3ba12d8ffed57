//! The causal process template: a strict partial order over the selected
//! relations, supplied as domain knowledge.

use std::collections::{BTreeMap, BTreeSet};

use crate::catalog::{Catalog, JoinPlan};
use crate::config::{CptDocument, CptEdge};
use crate::error::{Error, Result};
use crate::report::{Issue, IssueKind, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CausalProcessTemplate {
    relations: BTreeSet<String>,
    precedes: BTreeSet<(String, String)>,
    transitive_closure: bool,
}

impl CausalProcessTemplate {
    /// Template from raw parts, without checks or reduction.
    pub fn new<R, E>(relations: R, edges: E) -> Self
    where
        R: IntoIterator,
        R::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        CausalProcessTemplate {
            relations: relations.into_iter().map(Into::into).collect(),
            precedes: edges.into_iter().collect(),
            transitive_closure: false,
        }
    }

    /// Parses the JSON form `{relations: [...], edges: [{from, to}]}`.
    pub fn parse(text: &str, catalog: Option<&Catalog>) -> Result<(Self, Vec<Issue>)> {
        let doc: CptDocument = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_document(&doc, catalog)
    }

    /// Builds a template from its document form. Relations must exist in
    /// the catalog (when given) and edges must stay inside the listed
    /// relations. When the edges are acyclic, edges implied by others are
    /// dropped and reported as warnings.
    pub fn from_document(
        doc: &CptDocument,
        catalog: Option<&Catalog>,
    ) -> Result<(Self, Vec<Issue>)> {
        let relations: BTreeSet<String> = doc.relations.iter().cloned().collect();
        if let Some(catalog) = catalog {
            if let Some(r) = relations.iter().find(|r| catalog.index_of(r).is_none()) {
                return Err(Error::UnknownRelation(r.clone()));
            }
        }
        let mut precedes = BTreeSet::new();
        for CptEdge { from, to } in &doc.edges {
            for end in [from, to] {
                if !relations.contains(end) {
                    return Err(Error::UnknownRelation(end.clone()));
                }
            }
            precedes.insert((from.clone(), to.clone()));
        }
        let mut cpt = CausalProcessTemplate {
            relations,
            precedes,
            transitive_closure: doc.transitive_closure,
        };
        let mut warnings = Vec::new();
        if cpt.find_cycle().is_none() {
            for (from, to) in cpt.transitive_edges() {
                cpt.precedes.remove(&(from.clone(), to.clone()));
                warnings.push(Issue::warning(IssueKind::TransitiveEdge { from, to }));
            }
        }
        Ok((cpt, warnings))
    }

    /// Default template: parent -> child along the join tree.
    pub fn from_join_plan(catalog: &Catalog, plan: &JoinPlan) -> Self {
        let name = |i: usize| catalog.schemas()[i].name.clone();
        CausalProcessTemplate {
            relations: plan.relations().into_iter().map(name).collect(),
            precedes: plan
                .steps
                .iter()
                .map(|s| (name(s.parent), name(s.child)))
                .collect(),
            transitive_closure: false,
        }
    }

    pub fn with_transitive_closure(mut self, on: bool) -> Self {
        self.transitive_closure = on;
        self
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    /// The covering edges of the order.
    pub fn precedes(&self) -> &BTreeSet<(String, String)> {
        &self.precedes
    }

    pub fn uses_transitive_closure(&self) -> bool {
        self.transitive_closure
    }

    fn successors(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut succ: BTreeMap<&str, Vec<&str>> = self
            .relations
            .iter()
            .map(|r| (r.as_str(), Vec::new()))
            .collect();
        for (a, b) in &self.precedes {
            succ.entry(a).or_default().push(b);
        }
        succ
    }

    fn reachable_from(&self, start: &str, succ: &BTreeMap<&str, Vec<&str>>) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = succ.get(start).cloned().unwrap_or_default();
        while let Some(n) = stack.pop() {
            if seen.insert(n.to_string()) {
                stack.extend(succ.get(n).into_iter().flatten().copied());
            }
        }
        seen
    }

    fn transitive_edges(&self) -> Vec<(String, String)> {
        let succ = self.successors();
        self.precedes
            .iter()
            .filter(|(a, b)| {
                succ[a.as_str()]
                    .iter()
                    .any(|&mid| mid != b && self.reachable_from(mid, &succ).contains(b))
            })
            .cloned()
            .collect()
    }

    /// Pairs that become causal edges: the covering edges, or their
    /// transitive closure when enabled.
    pub fn causal_pairs(&self) -> Vec<(String, String)> {
        if !self.transitive_closure {
            return self.precedes.iter().cloned().collect();
        }
        let succ = self.successors();
        let mut pairs = Vec::new();
        for r in &self.relations {
            for t in self.reachable_from(r, &succ) {
                pairs.push((r.clone(), t));
            }
        }
        pairs
    }

    /// Some cycle of the order, listed from its smallest relation name.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let succ = self.successors();
        let mut mark: BTreeMap<&str, Mark> = succ.keys().map(|k| (*k, Mark::New)).collect();
        for &start in succ.keys() {
            if mark[start] != Mark::New {
                continue;
            }
            let mut path: Vec<&str> = vec![start];
            let mut iters: Vec<usize> = vec![0];
            mark.insert(start, Mark::Active);
            while let Some(&node) = path.last() {
                let i = iters.last_mut().unwrap();
                let next = succ.get(node).and_then(|v| v.get(*i)).copied();
                *i += 1;
                match next {
                    Some(n) => match mark.get(n).copied().unwrap_or(Mark::New) {
                        Mark::Active => {
                            let pos = path.iter().position(|p| *p == n).unwrap();
                            let mut cycle: Vec<String> =
                                path[pos..].iter().map(|s| s.to_string()).collect();
                            let min = (0..cycle.len())
                                .min_by(|&a, &b| cycle[a].cmp(&cycle[b]))
                                .unwrap();
                            cycle.rotate_left(min);
                            return Some(cycle);
                        }
                        Mark::New => {
                            mark.insert(n, Mark::Active);
                            path.push(n);
                            iters.push(0);
                        }
                        Mark::Done => {}
                    },
                    None => {
                        mark.insert(node, Mark::Done);
                        path.pop();
                        iters.pop();
                    }
                }
            }
        }
        None
    }

    /// Kahn's order, ties broken by name. `None` if the order is cyclic.
    pub fn topological_order(&self) -> Option<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.relations.iter().map(|r| (r.as_str(), 0)).collect();
        for (_, b) in &self.precedes {
            *indegree.entry(b).or_default() += 1;
        }
        let succ = self.successors();
        let mut ready: BTreeSet<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(r, _)| *r)
            .collect();
        let mut order = Vec::with_capacity(indegree.len());
        while let Some(r) = ready.pop_first() {
            order.push(r.to_string());
            for &s in succ.get(r).into_iter().flatten() {
                let d = indegree.get_mut(s).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(s);
                }
            }
        }
        (order.len() == indegree.len()).then_some(order)
    }

    /// Relations without a causal predecessor.
    pub fn sources(&self) -> Vec<String> {
        let targets: BTreeSet<&String> = self.precedes.iter().map(|(_, b)| b).collect();
        self.relations
            .iter()
            .filter(|r| !targets.contains(r))
            .cloned()
            .collect()
    }

    /// Relations without a causal successor.
    pub fn sinks(&self) -> Vec<String> {
        let origins: BTreeSet<&String> = self.precedes.iter().map(|(a, _)| a).collect();
        self.relations
            .iter()
            .filter(|r| !origins.contains(r))
            .cloned()
            .collect()
    }

    pub fn to_document(&self) -> CptDocument {
        CptDocument {
            relations: self.relations.iter().cloned().collect(),
            edges: self
                .precedes
                .iter()
                .map(|(from, to)| CptEdge {
                    from: from.clone(),
                    to: to.clone(),
                })
                .collect(),
            transitive_closure: self.transitive_closure,
        }
    }
}

/// Reports cycles (error), unknown relations and relations without a
/// timestamp (error), edges without a direct foreign key between their
/// relations (warning) and disconnected templates (warning).
pub fn validate_cpt(cpt: &CausalProcessTemplate, catalog: &Catalog) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Some(cycle) = cpt.find_cycle() {
        report.push(Issue::error(IssueKind::CausalCycle { cycle }));
    }
    for r in cpt.relations() {
        match catalog.schema(r) {
            None => report.push(Issue::error(IssueKind::UnknownRelation {
                relation: r.clone(),
            })),
            Some(s)
                if s.timestamp_attr
                    .as_deref()
                    .and_then(|t| s.attr(t))
                    .is_none() =>
            {
                report.push(Issue::error(IssueKind::MissingTimestamp {
                    relation: r.clone(),
                }))
            }
            Some(_) => {}
        }
    }
    for (a, b) in cpt.precedes() {
        if !cpt.relations().contains(a) || !cpt.relations().contains(b) {
            report.push(Issue::error(IssueKind::EdgeOutsideTemplate {
                from: a.clone(),
                to: b.clone(),
            }));
        } else if !catalog.linked(a, b) {
            report.push(Issue::warning(IssueKind::UnbackedEdge {
                from: a.clone(),
                to: b.clone(),
            }));
        }
    }
    if let Some(first) = cpt.relations().iter().next() {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in cpt.precedes() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen: BTreeSet<&str> = BTreeSet::from([first.as_str()]);
        let mut stack = vec![first.as_str()];
        while let Some(n) = stack.pop() {
            for &m in adj.get(n).into_iter().flatten() {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        let unreachable: Vec<String> = cpt
            .relations()
            .iter()
            .filter(|r| !seen.contains(r.as_str()))
            .cloned()
            .collect();
        if !unreachable.is_empty() {
            report.push(Issue::warning(IssueKind::Disconnected {
                relations: unreachable,
            }));
        }
    }
    report
}
