//! Fixtures and naive reference implementations. The oracles work on plain
//! string ids and scan edge lists; they share no code with the library
//! beyond reading its inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use cpm_core::catalog::Dataset;
use cpm_core::ceg::{CegView, EventDatabase};
use cpm_core::config::RunConfig;
use cpm_core::pipeline::{self, Built};

pub const RPO: &str = "Receive Purchase Order";
pub const POI: &str = "Pick Order Item";
pub const RS: &str = "Register Shipment";
pub const RCP: &str = "Register Customer Pickup";

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/shop")
}

pub fn shop_config() -> RunConfig {
    RunConfig::load(&fixture_dir().join("config.json")).expect("fixture config")
}

pub fn shop() -> Built {
    pipeline::build(&shop_config()).expect("fixture builds")
}

pub fn ids(db: &EventDatabase, events: &[u32]) -> BTreeSet<String> {
    events.iter().map(|&e| db.event(e).key.clone()).collect()
}

pub fn edge_ids(db: &EventDatabase, edges: &[(u32, u32)]) -> BTreeSet<(String, String)> {
    edges
        .iter()
        .map(|&(a, b)| (db.event(a).key.clone(), db.event(b).key.clone()))
        .collect()
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn pairs(items: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    items
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

/// Brute-force left outer join over a tree of relations: enumerates every
/// combination of one row (or null) per relation and keeps the maximal
/// consistent ones. `links[i] = (parent, child, holder, column)` where
/// `holder` names the relation carrying the foreign-key column.
pub fn brute_force_join(
    ds: &Dataset,
    relations: &[&str],
    links: &[(&str, &str, &str, &str)],
) -> BTreeSet<BTreeSet<(String, String)>> {
    let rows: Vec<Vec<Option<String>>> = relations
        .iter()
        .map(|r| {
            let mut v: Vec<Option<String>> = ds
                .instance(r)
                .unwrap()
                .rows()
                .iter()
                .map(|x| Some(x.key.clone()))
                .collect();
            v.push(None);
            v
        })
        .collect();
    let pos = |name: &str| relations.iter().position(|r| *r == name).unwrap();
    let fk = |holder: &str, key: &str, column: &str| -> Option<String> {
        ds.instance(holder)
            .unwrap()
            .get(key)
            .unwrap()
            .fk(column)
            .map(str::to_string)
    };
    let matches = |parent: &str, pk: &str, child: &str, ck: &str, holder: &str, column: &str| {
        if holder == child {
            fk(child, ck, column).as_deref() == Some(pk)
        } else {
            fk(parent, pk, column).as_deref() == Some(ck)
        }
    };
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; relations.len()];
    loop {
        let pick: Vec<&Option<String>> =
            idx.iter().enumerate().map(|(i, &j)| &rows[i][j]).collect();
        let mut ok = pick[0].is_some();
        for &(parent, child, holder, column) in links {
            let (p, c) = (pick[pos(parent)], pick[pos(child)]);
            ok &= match (p, c) {
                (None, None) => true,
                (None, Some(_)) => false,
                (Some(pk), Some(ck)) => matches(parent, pk, child, ck, holder, column),
                // Null only when no row matches.
                (Some(pk), None) => !rows[pos(child)]
                    .iter()
                    .flatten()
                    .any(|ck| matches(parent, pk, child, ck, holder, column)),
            };
        }
        if ok {
            out.insert(
                pick.iter()
                    .enumerate()
                    .filter_map(|(i, k)| k.as_ref().map(|k| (relations[i].to_string(), k.clone())))
                    .collect(),
            );
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return out;
            }
            idx[i] += 1;
            if idx[i] < rows[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// A view as plain data: event id → (label, time), edge list.
#[derive(Debug, Clone)]
pub struct Graph {
    pub events: BTreeMap<String, (String, i64)>,
    pub edges: Vec<(String, String)>,
}

pub fn graph(db: &EventDatabase, view: &CegView) -> Graph {
    Graph {
        events: view
            .events
            .iter()
            .map(|&e| (db.id(e), (db.label(e).to_string(), db.timestamp(e))))
            .collect(),
        edges: view
            .edges
            .iter()
            .map(|&(a, b)| (db.id(a), db.id(b)))
            .collect(),
    }
}

impl Graph {
    pub fn label(&self, e: &str) -> &str {
        &self.events[e].0
    }

    pub fn time(&self, e: &str) -> i64 {
        self.events[e].1
    }

    pub fn type_quantity(&self, l: &str) -> usize {
        self.events.values().filter(|(x, _)| x == l).count()
    }

    pub fn edge_quantity(&self, a: &str, b: &str) -> usize {
        let mut n = 0;
        for (v, w) in &self.edges {
            if self.label(v) == a && self.label(w) == b {
                n += 1;
            }
        }
        n
    }

    pub fn out(&self, v: &str, l: &str) -> u32 {
        self.edges
            .iter()
            .filter(|(x, w)| x == v && self.label(w) == l)
            .count() as u32
    }

    pub fn inc(&self, l: &str, w: &str) -> u32 {
        self.edges
            .iter()
            .filter(|(v, x)| x == w && self.label(v) == l)
            .count() as u32
    }

    pub fn min_max_out(&self, a: &str, b: &str) -> Option<(u32, u32)> {
        let ds: Vec<u32> = self
            .events
            .iter()
            .filter(|(_, (l, _))| l == a)
            .map(|(v, _)| self.out(v, b))
            .collect();
        Some((*ds.iter().min()?, *ds.iter().max()?))
    }

    pub fn min_max_in(&self, a: &str, b: &str) -> Option<(u32, u32)> {
        let ds: Vec<u32> = self
            .events
            .iter()
            .filter(|(_, (l, _))| l == b)
            .map(|(w, _)| self.inc(a, w))
            .collect();
        Some((*ds.iter().min()?, *ds.iter().max()?))
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.events.values().map(|(l, _)| l.clone()).collect()
    }

    pub fn type_edges(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|(v, w)| (self.label(v).to_string(), self.label(w).to_string()))
            .collect()
    }

    /// `t(e) - max{t(x) : (x, e) edge, t(x) <= t(e)}`, else 0.
    pub fn cycle_time(&self, e: &str) -> i64 {
        let mut best: Option<i64> = None;
        for (x, y) in &self.edges {
            if y == e && self.time(x) <= self.time(e) {
                best = Some(best.map_or(self.time(x), |b: i64| b.max(self.time(x))));
            }
        }
        match best {
            Some(b) => self.time(e) - b,
            None => 0,
        }
    }

    pub fn span(&self) -> i64 {
        let ts: Vec<i64> = self.events.values().map(|(_, t)| *t).collect();
        ts.iter().max().unwrap() - ts.iter().min().unwrap()
    }

    pub fn violations(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .filter(|(a, b)| self.time(a) > self.time(b))
            .cloned()
            .collect()
    }
}

pub type NaiveEdge = (usize, (u32, u32), (u32, u32));

/// Aggregation of a group of views: distinct-union quantities, per-view
/// ranges merged by min/max, out-degree 0 for views that hold source-typed
/// events without the type-edge.
pub fn naive_aggregate(
    graphs: &[&Graph],
) -> (
    BTreeMap<String, usize>,
    BTreeMap<(String, String), NaiveEdge>,
) {
    let mut events: BTreeMap<String, String> = BTreeMap::new();
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    for g in graphs {
        for (e, (l, _)) in &g.events {
            events.insert(e.clone(), l.clone());
        }
        edges.extend(g.edges.iter().cloned());
    }
    let mut types = BTreeMap::new();
    for l in events.values() {
        *types.entry(l.clone()).or_insert(0) += 1;
    }
    let mut out = BTreeMap::new();
    let type_edges: BTreeSet<(String, String)> = edges
        .iter()
        .map(|(a, b)| (events[a].clone(), events[b].clone()))
        .collect();
    for (a, b) in type_edges {
        let q = edges
            .iter()
            .filter(|(v, w)| events[v] == a && events[w] == b)
            .count();
        let mut cin: Option<(u32, u32)> = None;
        let mut cout: Option<(u32, u32)> = None;
        let widen = |acc: Option<(u32, u32)>, r: (u32, u32)| {
            Some(acc.map_or(r, |(x, y)| (x.min(r.0), y.max(r.1))))
        };
        for g in graphs {
            if g.type_edges().contains(&(a.clone(), b.clone())) {
                cin = widen(cin, g.min_max_in(&a, &b).unwrap());
                cout = widen(cout, g.min_max_out(&a, &b).unwrap());
            } else if g.labels().contains(&a) {
                cout = widen(cout, (0, 0));
            }
        }
        out.insert((a, b), (q, cin.unwrap(), cout.unwrap()));
    }
    (types, out)
}

/// Batching events: shared by fragments with different root keys.
pub fn naive_batching(db: &EventDatabase) -> BTreeSet<String> {
    let mut roots: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in db.fragments() {
        for &e in &f.events {
            roots.entry(db.id(e)).or_default().insert(db.id(f.root));
        }
    }
    roots
        .into_iter()
        .filter(|(_, r)| r.len() >= 2)
        .map(|(e, _)| e)
        .collect()
}

pub fn stats(samples: &[i64]) -> Option<(i64, f64, i64, usize)> {
    if samples.is_empty() {
        return None;
    }
    let sum: i64 = samples.iter().sum();
    Some((
        *samples.iter().min().unwrap(),
        sum as f64 / samples.len() as f64,
        *samples.iter().max().unwrap(),
        samples.len(),
    ))
}

pub mod random {
    use cpm_core::catalog::{Dataset, RelationInstance, Row};
    use cpm_core::generator::{generate, template, GeneratorConfig, ORDERS};
    use cpm_core::pipeline::{build_from_dataset, Built};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rebuild(ds: &Dataset, mut f: impl FnMut(&str, Vec<Row>) -> Vec<Row>) -> Dataset {
        let instances = ds
            .instances()
            .iter()
            .map(|i| {
                RelationInstance::new(i.relation(), f(i.relation(), i.rows().to_vec())).unwrap()
            })
            .collect();
        Dataset::new(ds.catalog().clone(), instances).unwrap()
    }

    /// Same rows in a different order.
    pub fn permuted(ds: &Dataset, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rebuild(ds, |_, mut rows| {
            rows.shuffle(&mut rng);
            rows
        })
    }

    /// Timestamps replaced by draws from `0..range`; small ranges give ties
    /// and violations.
    pub fn scrambled_times(ds: &Dataset, seed: u64, range: i64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rebuild(ds, |_, rows| {
            rows.into_iter()
                .map(|mut r| {
                    r.timestamp = rng.gen_range(0..range);
                    r
                })
                .collect()
        })
    }

    pub fn build(ds: Dataset) -> Built {
        build_from_dataset(ds, ORDERS, Some(&template())).unwrap()
    }

    /// A small generated database; every tenth seed keeps generator times,
    /// the others get scrambled ones.
    pub fn small_db(seed: u64) -> Built {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = rng.gen_range(1..=3);
        let cfg = GeneratorConfig {
            orders: rng.gen_range(1..=20),
            items_per_order: [lo, lo + rng.gen_range(0..=3)],
            batching_probability: rng.gen_range(0.0..0.6),
            pickup_probability: rng.gen_range(0.0..0.5),
            split_shipment_probability: rng.gen_range(0.0..0.5),
            violation_rate: rng.gen_range(0.0..0.3),
            late_item_rate: rng.gen_range(0.0..0.3),
            seed,
        };
        let ds = generate(&cfg).unwrap().dataset;
        if seed.is_multiple_of(10) {
            build(ds)
        } else {
            let range = rng.gen_range(5..500);
            build(scrambled_times(&ds, seed, range))
        }
    }
}
