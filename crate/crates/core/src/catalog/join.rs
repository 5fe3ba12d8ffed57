use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use super::{Catalog, Dataset};
use crate::error::{Error, Result};

/// One row of the left outer join: for every catalog relation, the row
/// index joined into this tuple, or `None` for null / not joined.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CausallyConnectedTuple {
    slots: Vec<Option<u32>>,
}

impl CausallyConnectedTuple {
    pub fn new(slots: Vec<Option<u32>>) -> Self {
        CausallyConnectedTuple { slots }
    }

    /// Row index per catalog relation.
    pub fn slots(&self) -> &[Option<u32>] {
        &self.slots
    }

    pub fn row(&self, relation: usize) -> Option<u32> {
        self.slots.get(relation).copied().flatten()
    }

    /// Number of non-null pk-pairs.
    pub fn arity(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Link {
    /// `child.column` holds the parent's primary key (1:N from the parent).
    ChildReferencesParent { column: String },
    /// `parent.column` holds the child's primary key (N:1 from the parent).
    ParentReferencesChild { column: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinStep {
    pub parent: usize,
    pub child: usize,
    pub link: Link,
}

/// Breadth-first spanning tree over the foreign keys restricted to the
/// selected relations, rooted at the root relation. Foreign keys that close
/// a cycle among the selected relations are not used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinPlan {
    pub root: usize,
    pub steps: Vec<JoinStep>,
}

impl JoinPlan {
    pub fn derive(catalog: &Catalog, relations: &[String], root: &str) -> Result<Self> {
        if relations.len() < 2 {
            return Err(Error::Config(format!(
                "a left outer join needs at least two relations, got {}",
                relations.len()
            )));
        }
        let mut selected = vec![false; catalog.len()];
        for r in relations {
            selected[catalog.require(r)?] = true;
        }
        let root = catalog.require(root)?;
        if !selected[root] {
            return Err(Error::Config(format!(
                "join root `{}` is not among the selected relations",
                catalog.schemas()[root].name
            )));
        }

        let mut visited = vec![false; catalog.len()];
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut steps = Vec::new();
        while let Some(current) = queue.pop_front() {
            let name = &catalog.schemas()[current].name;
            for fk in catalog.foreign_keys() {
                let (other, link) = if &fk.from_relation == name {
                    (
                        &fk.to_relation,
                        Link::ParentReferencesChild {
                            column: fk.from_attr.clone(),
                        },
                    )
                } else if &fk.to_relation == name {
                    (
                        &fk.from_relation,
                        Link::ChildReferencesParent {
                            column: fk.from_attr.clone(),
                        },
                    )
                } else {
                    continue;
                };
                let Some(child) = catalog.index_of(other) else {
                    continue;
                };
                if selected[child] && !visited[child] {
                    visited[child] = true;
                    queue.push_back(child);
                    steps.push(JoinStep {
                        parent: current,
                        child,
                        link,
                    });
                }
            }
        }
        if let Some(i) = (0..catalog.len()).find(|&i| selected[i] && !visited[i]) {
            return Err(Error::Disconnected(catalog.schemas()[i].name.clone()));
        }
        Ok(JoinPlan { root, steps })
    }

    /// Relations in join order, root first.
    pub fn relations(&self) -> Vec<usize> {
        std::iter::once(self.root)
            .chain(self.steps.iter().map(|s| s.child))
            .collect()
    }
}

/// Evaluates the plan. Every root row yields at least one tuple; unmatched
/// branches stay null. The result is sorted by primary-key values in join
/// order and free of duplicates, so it does not depend on row order.
pub fn left_outer_join(ds: &Dataset, plan: &JoinPlan) -> Vec<CausallyConnectedTuple> {
    let n = ds.catalog().len();
    let mut partial: Vec<Vec<Option<u32>>> = (0..ds.instance_at(plan.root).len() as u32)
        .map(|row| {
            let mut slots = vec![None; n];
            slots[plan.root] = Some(row);
            slots
        })
        .collect();

    for step in &plan.steps {
        let parent = ds.instance_at(step.parent);
        let child = ds.instance_at(step.child);
        let mut next = Vec::with_capacity(partial.len());
        match &step.link {
            Link::ChildReferencesParent { column } => {
                let mut by_parent: HashMap<&str, Vec<u32>> = HashMap::new();
                for (i, row) in child.rows().iter().enumerate() {
                    if let Some(v) = row.fk(column) {
                        by_parent.entry(v).or_default().push(i as u32);
                    }
                }
                for rows in by_parent.values_mut() {
                    rows.sort_by(|a, b| child.row(*a).key.cmp(&child.row(*b).key));
                }
                for slots in partial {
                    let matches =
                        slots[step.parent].and_then(|p| by_parent.get(parent.row(p).key.as_str()));
                    match matches {
                        Some(rows) => {
                            for &r in rows {
                                let mut s = slots.clone();
                                s[step.child] = Some(r);
                                next.push(s);
                            }
                        }
                        None => next.push(slots),
                    }
                }
            }
            Link::ParentReferencesChild { column } => {
                for mut slots in partial {
                    slots[step.child] = slots[step.parent]
                        .and_then(|p| parent.row(p).fk(column))
                        .and_then(|v| child.position(v));
                    next.push(slots);
                }
            }
        }
        partial = next;
    }

    let order = plan.relations();
    let key = |rel: usize, slot: Option<u32>| slot.map(|r| ds.instance_at(rel).row(r).key.as_str());
    partial.sort_by(|a, b| {
        order
            .iter()
            .map(|&rel| key(rel, a[rel]).cmp(&key(rel, b[rel])))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    partial.dedup();
    partial
        .into_iter()
        .map(CausallyConnectedTuple::new)
        .collect()
}
