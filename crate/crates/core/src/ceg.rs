//! Causal event graphs.
//!
//! Every causally connected tuple becomes a fragment: one event per
//! non-null (relation, key) pair and one edge per template pair whose both
//! relations are present. The database is the set union of all fragments.
//! Views (fragments, connected components, case projections) are induced
//! sub-graphs of the database.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::catalog::{CausallyConnectedTuple, Dataset};
use crate::cpt::CausalProcessTemplate;
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::time::Micros;

pub type EventIdx = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInfo {
    pub name: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Index into [`EventDatabase::relations`].
    pub relation: u16,
    pub key: String,
    pub timestamp: Micros,
    pub attrs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fragment {
    /// The event of the join-root relation.
    pub root: EventIdx,
    /// Sorted event indices.
    pub events: Vec<EventIdx>,
}

/// A row of a catalog relation, as referenced by a tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventKey {
    pub relation: usize,
    pub row: u32,
}

/// The graph of a single tuple, before it is merged into a database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentGraph {
    pub events: Vec<EventKey>,
    pub edges: Vec<(EventKey, EventKey)>,
}

/// Template pairs resolved to catalog indices.
#[derive(Debug, Clone)]
struct ResolvedTemplate {
    members: Vec<bool>,
    pairs: Vec<(usize, usize)>,
}

impl ResolvedTemplate {
    fn new(ds: &Dataset, cpt: &CausalProcessTemplate) -> Result<Self> {
        let catalog = ds.catalog();
        let mut members = vec![false; catalog.len()];
        for r in cpt.relations() {
            members[catalog.require(r)?] = true;
        }
        let pairs = cpt
            .causal_pairs()
            .iter()
            .map(|(a, b)| Ok((catalog.require(a)?, catalog.require(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ResolvedTemplate { members, pairs })
    }

    fn fragment(&self, ds: &Dataset, tuple: &CausallyConnectedTuple) -> Result<FragmentGraph> {
        let mut events = Vec::with_capacity(tuple.arity());
        for (relation, slot) in tuple.slots().iter().enumerate() {
            let Some(row) = *slot else { continue };
            let name = &ds
                .catalog()
                .schemas()
                .get(relation)
                .ok_or_else(|| {
                    Error::Invariant(format!(
                        "tuple references relation #{relation} outside the catalog"
                    ))
                })?
                .name;
            if !self.members[relation] {
                return Err(Error::Config(format!(
                    "relation `{name}` is not part of the causal process template"
                )));
            }
            if row as usize >= ds.instance_at(relation).len() {
                return Err(Error::Invariant(format!(
                    "tuple references missing row #{row} of `{name}`"
                )));
            }
            events.push(EventKey { relation, row });
        }
        let edges = self
            .pairs
            .iter()
            .filter_map(|&(a, b)| {
                let ra = tuple.row(a)?;
                let rb = tuple.row(b)?;
                Some((
                    EventKey {
                        relation: a,
                        row: ra,
                    },
                    EventKey {
                        relation: b,
                        row: rb,
                    },
                ))
            })
            .collect();
        Ok(FragmentGraph { events, edges })
    }
}

/// Builds the causal event graph of one tuple.
pub fn build_fragment(
    ds: &Dataset,
    tuple: &CausallyConnectedTuple,
    cpt: &CausalProcessTemplate,
) -> Result<FragmentGraph> {
    ResolvedTemplate::new(ds, cpt)?.fragment(ds, tuple)
}

/// Compressed adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Adjacency {
    offsets: Vec<u32>,
    targets: Vec<EventIdx>,
}

impl Adjacency {
    fn new(n: usize, pairs: impl Iterator<Item = (EventIdx, EventIdx)> + Clone) -> Self {
        let mut offsets = vec![0u32; n + 1];
        for (a, _) in pairs.clone() {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n] as usize];
        for (a, b) in pairs {
            targets[fill[a as usize] as usize] = b;
            fill[a as usize] += 1;
        }
        for i in 0..n {
            targets[offsets[i] as usize..offsets[i + 1] as usize].sort_unstable();
        }
        Adjacency { offsets, targets }
    }

    fn get(&self, e: EventIdx) -> &[EventIdx] {
        &self.targets[self.offsets[e as usize] as usize..self.offsets[e as usize + 1] as usize]
    }
}

/// The union of all fragments. Immutable once built.
///
/// Events are ordered by (relation name, key) and fragments by their event
/// lists, so two databases built from the same tuples in any order are
/// identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDatabase {
    relations: Vec<RelationInfo>,
    root_relation: u16,
    events: Vec<Event>,
    edges: Vec<(EventIdx, EventIdx)>,
    fragments: Vec<Fragment>,
    postset: Adjacency,
    preset: Adjacency,
    membership: Adjacency,
    keys: Vec<HashMap<String, EventIdx>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViewKind {
    Fragment(usize),
    Component(usize),
    CaseProjection { relation: String, key: String },
    Custom(String),
}

/// An induced sub-graph of the database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CegView {
    pub kind: ViewKind,
    /// Sorted event indices.
    pub events: Vec<EventIdx>,
    /// Sorted edges between events of the view.
    pub edges: Vec<(EventIdx, EventIdx)>,
}

impl CegView {
    pub fn id(&self) -> String {
        match &self.kind {
            ViewKind::Fragment(i) => format!("fragment-{i}"),
            ViewKind::Component(i) => format!("component-{i}"),
            ViewKind::CaseProjection { relation, key } => format!("{relation}:{key}"),
            ViewKind::Custom(name) => name.clone(),
        }
    }

    pub fn contains(&self, e: EventIdx) -> bool {
        self.events.binary_search(&e).is_ok()
    }

    pub fn preset(&self, e: EventIdx) -> impl Iterator<Item = EventIdx> + '_ {
        self.edges
            .iter()
            .filter(move |(_, b)| *b == e)
            .map(|(a, _)| *a)
    }

    pub fn postset(&self, e: EventIdx) -> impl Iterator<Item = EventIdx> + '_ {
        let start = self.edges.partition_point(|(a, _)| *a < e);
        self.edges[start..]
            .iter()
            .take_while(move |(a, _)| *a == e)
            .map(|(_, b)| *b)
    }
}

/// `t - max{t(x) : x cause, t(x) <= t}`, or 0 when no cause is at or
/// before `t`.
pub fn cycle_time_from(t: Micros, cause_times: impl IntoIterator<Item = Micros>) -> Micros {
    cause_times
        .into_iter()
        .filter(|&c| c <= t)
        .max()
        .map_or(0, |latest| t - latest)
}

impl EventDatabase {
    /// Unions the fragments of all tuples. `root` is the join-root relation;
    /// every tuple must contain a key of it.
    pub fn build(
        ds: &Dataset,
        tuples: &[CausallyConnectedTuple],
        cpt: &CausalProcessTemplate,
        root: &str,
    ) -> Result<Self> {
        let catalog = ds.catalog();
        let root_idx = catalog.require(root)?;
        let resolved = ResolvedTemplate::new(ds, cpt)?;
        let graphs = tuples
            .par_iter()
            .map(|t| resolved.fragment(ds, t))
            .collect::<Result<Vec<_>>>()?;

        let mut used: Vec<Vec<bool>> = ds
            .instances()
            .iter()
            .map(|i| vec![false; i.len()])
            .collect();
        for g in &graphs {
            for k in &g.events {
                used[k.relation][k.row as usize] = true;
            }
        }
        let mut event_of: Vec<Vec<EventIdx>> =
            used.iter().map(|u| vec![EventIdx::MAX; u.len()]).collect();
        let mut events = Vec::new();
        for (relation, flags) in used.iter().enumerate() {
            let inst = ds.instance_at(relation);
            let mut rows: Vec<u32> = (0..flags.len() as u32)
                .filter(|&r| flags[r as usize])
                .collect();
            rows.sort_by(|a, b| inst.row(*a).key.cmp(&inst.row(*b).key));
            for r in rows {
                let row = inst.row(r);
                event_of[relation][r as usize] = events.len() as EventIdx;
                events.push(Event {
                    relation: relation as u16,
                    key: row.key.clone(),
                    timestamp: row.timestamp,
                    attrs: row.attrs.clone(),
                });
            }
        }
        let idx = |k: &EventKey| event_of[k.relation][k.row as usize];

        let mut edges: Vec<(EventIdx, EventIdx)> = graphs
            .iter()
            .flat_map(|g| g.edges.iter().map(|(a, b)| (idx(a), idx(b))))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let fragments = graphs
            .iter()
            .map(|g| {
                let root = g
                    .events
                    .iter()
                    .find(|k| k.relation == root_idx)
                    .map(&idx)
                    .ok_or_else(|| {
                        Error::Invariant(format!(
                            "tuple without a key of the root relation `{root}`"
                        ))
                    })?;
                let mut evs: Vec<EventIdx> = g.events.iter().map(&idx).collect();
                evs.sort_unstable();
                Ok(Fragment { root, events: evs })
            })
            .collect::<Result<Vec<_>>>()?;

        let relations = catalog
            .schemas()
            .iter()
            .map(|s| RelationInfo {
                name: s.name.clone(),
                label: s.label.clone(),
            })
            .collect();
        Self::from_parts(relations, root_idx as u16, events, edges, fragments)
    }

    /// Assembles a database from its parts, canonicalising order and
    /// checking that the edges are acyclic.
    pub fn from_parts(
        relations: Vec<RelationInfo>,
        root_relation: u16,
        events: Vec<Event>,
        mut edges: Vec<(EventIdx, EventIdx)>,
        mut fragments: Vec<Fragment>,
    ) -> Result<Self> {
        let n = events.len();
        if let Some(e) = events
            .iter()
            .find(|e| e.relation as usize >= relations.len())
        {
            return Err(Error::Invariant(format!(
                "event `{}` has an unknown relation",
                e.key
            )));
        }
        if edges
            .iter()
            .any(|&(a, b)| a as usize >= n || b as usize >= n)
            || fragments
                .iter()
                .any(|f| f.root as usize >= n || f.events.iter().any(|&e| e as usize >= n))
        {
            return Err(Error::Invariant(
                "edge or fragment references a missing event".into(),
            ));
        }
        edges.sort_unstable();
        edges.dedup();
        for f in &mut fragments {
            f.events.sort_unstable();
            f.events.dedup();
        }
        fragments.sort_by(|a, b| a.events.cmp(&b.events).then(a.root.cmp(&b.root)));
        fragments.dedup();

        let postset = Adjacency::new(n, edges.iter().copied());
        let preset = Adjacency::new(n, edges.iter().map(|&(a, b)| (b, a)));
        let membership = Adjacency::new(
            n,
            fragments
                .iter()
                .enumerate()
                .flat_map(|(i, f)| f.events.iter().map(move |&e| (e, i as EventIdx))),
        );
        let mut keys: Vec<HashMap<String, EventIdx>> = vec![HashMap::new(); relations.len()];
        for (i, e) in events.iter().enumerate() {
            if keys[e.relation as usize]
                .insert(e.key.clone(), i as EventIdx)
                .is_some()
            {
                return Err(Error::Invariant(format!(
                    "duplicate event {}:{}",
                    relations[e.relation as usize].name, e.key
                )));
            }
        }
        let db = EventDatabase {
            relations,
            root_relation,
            events,
            edges,
            fragments,
            postset,
            preset,
            membership,
            keys,
        };
        if let Some(e) = db.find_cycle_event() {
            return Err(Error::Invariant(format!(
                "causal cycle through event {}",
                db.id(e)
            )));
        }
        Ok(db)
    }

    fn find_cycle_event(&self) -> Option<EventIdx> {
        let n = self.events.len();
        let mut indegree: Vec<u32> = (0..n as EventIdx)
            .map(|e| self.preset(e).len() as u32)
            .collect();
        let mut ready: Vec<EventIdx> = (0..n as EventIdx)
            .filter(|&e| indegree[e as usize] == 0)
            .collect();
        let mut seen = 0;
        while let Some(e) = ready.pop() {
            seen += 1;
            for &s in self.postset(e) {
                indegree[s as usize] -= 1;
                if indegree[s as usize] == 0 {
                    ready.push(s);
                }
            }
        }
        (seen < n).then(|| {
            (0..n as EventIdx)
                .find(|&e| indegree[e as usize] > 0)
                .unwrap()
        })
    }

    pub fn relations(&self) -> &[RelationInfo] {
        &self.relations
    }

    pub fn root_relation(&self) -> &RelationInfo {
        &self.relations[self.root_relation as usize]
    }

    pub fn root_relation_index(&self) -> u16 {
        self.root_relation
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, e: EventIdx) -> &Event {
        &self.events[e as usize]
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn edges(&self) -> &[(EventIdx, EventIdx)] {
        &self.edges
    }

    pub fn fragments(&self) -> &[Fragment] {
        &self.fragments
    }

    /// Event type, i.e. the label of the event's relation.
    pub fn label(&self, e: EventIdx) -> &str {
        &self.relations[self.events[e as usize].relation as usize].label
    }

    pub fn relation_name(&self, e: EventIdx) -> &str {
        &self.relations[self.events[e as usize].relation as usize].name
    }

    pub fn timestamp(&self, e: EventIdx) -> Micros {
        self.events[e as usize].timestamp
    }

    /// Namespaced identifier `relation:key`.
    pub fn id(&self, e: EventIdx) -> String {
        format!("{}:{}", self.relation_name(e), self.events[e as usize].key)
    }

    pub fn find(&self, relation: &str, key: &str) -> Option<EventIdx> {
        let r = self.relations.iter().position(|r| r.name == relation)?;
        self.keys[r].get(key).copied()
    }

    /// Looks up an event by its `relation:key` identifier.
    pub fn find_id(&self, id: &str) -> Option<EventIdx> {
        let (relation, key) = id.split_once(':')?;
        self.find(relation, key)
    }

    pub fn preset(&self, e: EventIdx) -> &[EventIdx] {
        self.preset.get(e)
    }

    pub fn postset(&self, e: EventIdx) -> &[EventIdx] {
        self.postset.get(e)
    }

    /// Fragments containing the event.
    pub fn membership(&self, e: EventIdx) -> &[EventIdx] {
        self.membership.get(e)
    }

    /// Events of one relation, in key order.
    pub fn events_of(&self, relation: &str) -> Vec<EventIdx> {
        match self.relations.iter().position(|r| r.name == relation) {
            Some(r) => (0..self.events.len() as EventIdx)
                .filter(|&e| self.events[e as usize].relation as usize == r)
                .collect(),
            None => Vec::new(),
        }
    }

    /// The sub-graph induced by `events`.
    pub fn induced_view(&self, kind: ViewKind, mut events: Vec<EventIdx>) -> CegView {
        events.sort_unstable();
        events.dedup();
        let mut edges = Vec::new();
        for &e in &events {
            for &s in self.postset(e) {
                if events.binary_search(&s).is_ok() {
                    edges.push((e, s));
                }
            }
        }
        CegView {
            kind,
            events,
            edges,
        }
    }

    /// The whole database as one view.
    pub fn full_view(&self) -> CegView {
        CegView {
            kind: ViewKind::Custom("database".into()),
            events: (0..self.events.len() as EventIdx).collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn fragment_views(&self) -> Vec<CegView> {
        self.fragments
            .iter()
            .enumerate()
            .map(|(i, f)| self.induced_view(ViewKind::Fragment(i), f.events.clone()))
            .collect()
    }

    /// Maximally connected components, edges taken as undirected, ordered
    /// by their smallest event.
    pub fn components(&self) -> Vec<CegView> {
        let mut sets = DisjointSets::new(self.events.len());
        for &(a, b) in &self.edges {
            sets.union(a, b);
        }
        let mut groups: Vec<Vec<EventIdx>> = Vec::new();
        let mut slot: HashMap<u32, usize> = HashMap::new();
        for e in 0..self.events.len() as EventIdx {
            let root = sets.find(e);
            let i = *slot.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[i].push(e);
        }
        groups
            .into_iter()
            .enumerate()
            .map(|(i, evs)| self.induced_view(ViewKind::Component(i), evs))
            .collect()
    }

    /// One view per key of `relation`: the union of all fragments that
    /// contain it. Shared events appear in every projection that reaches
    /// them.
    pub fn case_projection(&self, relation: &str) -> Result<Vec<CegView>> {
        if !self.relations.iter().any(|r| r.name == relation) {
            return Err(Error::UnknownRelation(relation.to_string()));
        }
        Ok(self
            .events_of(relation)
            .into_par_iter()
            .map(|e| {
                let events: Vec<EventIdx> = self
                    .membership(e)
                    .iter()
                    .flat_map(|&f| self.fragments[f as usize].events.iter().copied())
                    .collect();
                let kind = ViewKind::CaseProjection {
                    relation: relation.to_string(),
                    key: self.events[e as usize].key.clone(),
                };
                self.induced_view(kind, events)
            })
            .collect())
    }

    /// Shared by fragments of at least two distinct root keys.
    pub fn is_batching(&self, e: EventIdx) -> bool {
        let mut roots = self
            .membership(e)
            .iter()
            .map(|&f| self.fragments[f as usize].root);
        match roots.next() {
            Some(first) => roots.any(|r| r != first),
            None => false,
        }
    }

    pub fn batching_events(&self) -> Vec<EventIdx> {
        (0..self.events.len() as EventIdx)
            .filter(|&e| self.is_batching(e))
            .collect()
    }

    pub fn batching_events_in(&self, view: &CegView) -> Vec<EventIdx> {
        view.events
            .iter()
            .copied()
            .filter(|&e| self.is_batching(e))
            .collect()
    }

    /// Cycle time against all causes in the database.
    pub fn cycle_time(&self, e: EventIdx) -> Micros {
        cycle_time_from(
            self.timestamp(e),
            self.preset(e).iter().map(|&p| self.timestamp(p)),
        )
    }

    /// Cycle time against the causes inside `view`.
    pub fn cycle_time_in(&self, view: &CegView, e: EventIdx) -> Micros {
        cycle_time_from(
            self.timestamp(e),
            self.preset(e)
                .iter()
                .filter(|&&p| view.contains(p))
                .map(|&p| self.timestamp(p)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(name: &str) -> RelationInfo {
        RelationInfo {
            name: name.into(),
            label: name.into(),
        }
    }

    fn ev(relation: u16, key: &str, timestamp: Micros) -> Event {
        Event {
            relation,
            key: key.into(),
            timestamp,
            attrs: BTreeMap::new(),
        }
    }

    #[test]
    fn cycle_time_rules() {
        assert_eq!(cycle_time_from(160, [100]), 60);
        assert_eq!(cycle_time_from(100, []), 0);
        assert_eq!(cycle_time_from(200, [120, 150]), 50);
        assert_eq!(cycle_time_from(200, [250]), 0);
        assert_eq!(cycle_time_from(200, [200, 300]), 0);
    }

    #[test]
    fn empty_database_has_no_views() {
        let db = EventDatabase::from_parts(vec![info("a")], 0, vec![], vec![], vec![]).unwrap();
        assert!(db.components().is_empty());
        assert!(db.fragment_views().is_empty());
        assert!(db.case_projection("a").unwrap().is_empty());
        assert!(db.batching_events().is_empty());
    }

    #[test]
    fn single_event_is_one_component() {
        let db = EventDatabase::from_parts(
            vec![info("a")],
            0,
            vec![ev(0, "x", 5)],
            vec![],
            vec![Fragment {
                root: 0,
                events: vec![0],
            }],
        )
        .unwrap();
        let comps = db.components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].events, vec![0]);
        assert_eq!(db.cycle_time(0), 0);
    }

    #[test]
    fn rejects_cycles() {
        let err = EventDatabase::from_parts(
            vec![info("a")],
            0,
            vec![ev(0, "x", 1), ev(0, "y", 2)],
            vec![(0, 1), (1, 0)],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn unknown_projection_root_is_an_error() {
        let db = EventDatabase::from_parts(vec![info("a")], 0, vec![], vec![], vec![]).unwrap();
        assert!(matches!(
            db.case_projection("zz"),
            Err(Error::UnknownRelation(_))
        ));
    }
}
