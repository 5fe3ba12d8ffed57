mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use cpm_core::aceg::aggregate_level3;
use cpm_core::analysis::{
    conformance_table, flatten_to_event_log, temporal_violations, violation_counts, ExpectedModel,
    FlowGraph,
};
use cpm_core::ceg::EventDatabase;
use cpm_core::export::csv::{write_conformance_grid, write_event_log, write_violations};
use cpm_core::export::{aceg_to_dot, ceg_to_dot, load_database, save_database, CycleTimeColors};
use cpm_core::pipeline::labels;

#[derive(Debug, PartialEq, Clone)]
enum Tok {
    Id(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut it = src.chars().peekable();
    while let Some(c) = it.next() {
        match c {
            c if c.is_whitespace() => {}
            '{' => out.push(Tok::Sym("{")),
            '}' => out.push(Tok::Sym("}")),
            '[' => out.push(Tok::Sym("[")),
            ']' => out.push(Tok::Sym("]")),
            ';' => out.push(Tok::Sym(";")),
            ',' => out.push(Tok::Sym(",")),
            '=' => out.push(Tok::Sym("=")),
            '-' if it.peek() == Some(&'>') => {
                it.next();
                out.push(Tok::Sym("->"));
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match it.next().expect("unterminated string") {
                        '"' => break,
                        '\\' => {
                            let e = it.next().expect("dangling escape");
                            s.push(if e == 'n' { '\n' } else { e });
                        }
                        '\n' => panic!("raw newline in string"),
                        c => s.push(c),
                    }
                }
                out.push(Tok::Id(s));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut s = c.to_string();
                while let Some(&d) = it.peek() {
                    if d.is_alphanumeric() || d == '_' || d == '.' {
                        s.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Id(s));
            }
            c => panic!("unexpected character {c:?}"),
        }
    }
    out
}

#[derive(Debug, Default)]
struct Dot {
    nodes: BTreeMap<String, BTreeMap<String, String>>,
    edges: Vec<(String, String, BTreeMap<String, String>)>,
}

/// A strict subset of the DOT grammar: `digraph ID { stmt; ... }` with node,
/// edge, attribute and `ID = ID` statements.
fn parse_dot(src: &str) -> Dot {
    let toks = lex(src);
    let mut i = 0;
    let id = |i: &mut usize| match &toks[*i] {
        Tok::Id(s) => {
            *i += 1;
            s.clone()
        }
        t => panic!("expected id, got {t:?}"),
    };
    let sym = |i: &mut usize, s: &str| {
        assert_eq!(
            toks[*i],
            Tok::Sym(Box::leak(s.to_string().into_boxed_str())),
            "at token {i}"
        );
        *i += 1;
    };
    let attrs = |i: &mut usize| {
        let mut m = BTreeMap::new();
        if toks.get(*i) == Some(&Tok::Sym("[")) {
            *i += 1;
            while toks[*i] != Tok::Sym("]") {
                let k = id(i);
                sym(i, "=");
                m.insert(k, id(i));
                if toks[*i] == Tok::Sym(",") {
                    *i += 1;
                }
            }
            *i += 1;
        }
        m
    };
    assert_eq!(id(&mut i), "digraph");
    id(&mut i);
    sym(&mut i, "{");
    let mut dot = Dot::default();
    while toks[i] != Tok::Sym("}") {
        let a = id(&mut i);
        if toks[i] == Tok::Sym("=") {
            i += 1;
            id(&mut i);
        } else if toks[i] == Tok::Sym("->") {
            i += 1;
            let b = id(&mut i);
            let m = attrs(&mut i);
            dot.edges.push((a, b, m));
        } else {
            let m = attrs(&mut i);
            if !matches!(a.as_str(), "node" | "edge" | "graph") {
                dot.nodes.insert(a, m);
            }
        }
        sym(&mut i, ";");
    }
    assert_eq!(i + 1, toks.len(), "trailing tokens");
    for (a, b, _) in &dot.edges {
        assert!(
            dot.nodes.contains_key(a) && dot.nodes.contains_key(b),
            "undeclared node in {a} -> {b}"
        );
    }
    dot
}

fn shifted(db: &EventDatabase, event: &str, to: i64) -> EventDatabase {
    let mut events = db.events().to_vec();
    events[db.find_id(event).unwrap() as usize].timestamp = to;
    EventDatabase::from_parts(
        db.relations().to_vec(),
        db.root_relation_index(),
        events,
        db.edges().to_vec(),
        db.fragments().to_vec(),
    )
    .unwrap()
}

#[test]
fn ceg_dot_is_well_formed() {
    let b = shop();
    let db = &b.db;
    for view in db
        .case_projection("purchase_orders")
        .unwrap()
        .iter()
        .chain(db.components().iter())
    {
        let dot = parse_dot(&ceg_to_dot(db, view, None));
        assert_eq!(dot.nodes.len(), view.events.len());
        assert_eq!(dot.edges.len(), view.edges.len());
        assert!(dot.edges.iter().all(|(_, _, a)| !a.contains_key("color")));
    }
    let full = db.full_view();
    let dot = parse_dot(&ceg_to_dot(
        db,
        &full,
        Some(CycleTimeColors::new([0, 61 * 60_000_000])),
    ));
    assert_eq!(dot.nodes["purchase_orders:or1"]["fillcolor"], "palegreen");
    assert_eq!(dot.nodes["order_items:pi1"]["fillcolor"], "orange");
    assert_eq!(dot.nodes["shipments:sh2"]["fillcolor"], "tomato");
    assert_eq!(
        dot.nodes["order_items:pi1"]["label"],
        "order_items:pi1\nPick Order Item"
    );
}

#[test]
fn uniform_cycle_times_use_one_color() {
    let b = shop();
    let db = &b.db;
    let view = &db.case_projection("purchase_orders").unwrap()[1];
    // or2 → pi4 → sh2 with equal gaps.
    let mut d = shifted(db, "order_items:pi4", 0);
    d = shifted(&d, "purchase_orders:or2", 0);
    d = shifted(&d, "shipments:sh2", 0);
    let dot = parse_dot(&ceg_to_dot(&d, view, None));
    let colors: BTreeSet<_> = dot.nodes.values().map(|a| a["fillcolor"].clone()).collect();
    assert_eq!(colors.len(), 1, "{colors:?}");
}

#[test]
fn one_violation_gives_one_red_edge() {
    let b = shop();
    // pi2 now happens after sh1.
    let db = shifted(
        &b.db,
        "order_items:pi2",
        b.db.timestamp(b.db.find_id("shipments:sh1").unwrap()) + 1,
    );
    let v = temporal_violations(&db);
    assert_eq!(v.len(), 1);
    let text = ceg_to_dot(&db, &db.full_view(), None);
    assert_eq!(text.matches("color=\"red\"").count(), 1);
    let dot = parse_dot(&text);
    let red: Vec<_> = dot
        .edges
        .iter()
        .filter(|(_, _, a)| a.get("color").map(String::as_str) == Some("red"))
        .collect();
    assert_eq!(
        (red[0].0.as_str(), red[0].1.as_str()),
        ("order_items:pi2", "shipments:sh1")
    );

    let views = db.case_projection("purchase_orders").unwrap();
    let a = aggregate_level3(&db, &views);
    let text = aceg_to_dot(&a, "all", &violation_counts(&v));
    assert_eq!(text.matches("color=\"red\"").count(), 1);
    let dot = parse_dot(&text);
    assert_eq!(dot.nodes.len(), 4);
    assert_eq!(dot.edges.len(), 3);
}

#[test]
fn database_json_round_trip_is_byte_stable() {
    let b = shop();
    let mut first = Vec::new();
    save_database(&b.db, &mut first).unwrap();
    let back = load_database(first.as_slice()).unwrap();
    assert_eq!(back, b.db);
    let mut second = Vec::new();
    save_database(&back, &mut second).unwrap();
    assert_eq!(first, second);
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["events"].as_array().unwrap().len(), 11);
    assert_eq!(v["edges"].as_array().unwrap().len(), 10);
    assert!(load_database(&b"{\"events\": 3}"[..]).is_err());
}

#[test]
fn csv_outputs() {
    let b = shop();
    let db = &b.db;
    let model = ExpectedModel::from_cpt(&b.cpt, &labels(db));
    let views = db.case_projection("purchase_orders").unwrap();
    let table = conformance_table(
        &FlowGraph::from_aceg(&aggregate_level3(db, &views)),
        &model,
        &BTreeMap::new(),
    );
    let mut out = Vec::new();
    write_conformance_grid(&table, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.first().map(String::as_str), Some("source"));
    assert_eq!(header.last().map(String::as_str), Some("Total"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), header.len() - 2);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rpo = rows.iter().find(|r| &r[0] == RPO).unwrap();
    assert_eq!(&rpo[col(POI)], "5 / 0");
    assert_eq!(&rpo[col(RS)], "0 / 0");
    assert_eq!(&rpo[col("Total")], "5 / 0 (0.00%)");
    let poi = rows.iter().find(|r| &r[0] == POI).unwrap();
    assert_eq!(&poi[col("Total")], "5 / 0 (0.00%)");
    let end = rows.iter().find(|r| &r[0] == "End").unwrap();
    assert_eq!(&end[col("Total")], "0 / 0 (0.00%)");

    let mut out = Vec::new();
    write_event_log(
        &flatten_to_event_log(db, "purchase_orders").unwrap(),
        &mut out,
    )
    .unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("case,activity,timestamp,event\n"));

    let mut out = Vec::new();
    write_violations(&[], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
}
