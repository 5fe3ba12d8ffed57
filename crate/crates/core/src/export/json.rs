//! The database artifact and the ACEG document.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::aceg::AggregatedCeg;
use crate::ceg::{Event, EventDatabase, EventIdx, Fragment, RelationInfo};
use crate::error::{Error, Result};
use crate::time::Micros;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseDocument {
    pub root: String,
    pub relations: Vec<RelationDoc>,
    pub events: Vec<EventDoc>,
    pub edges: Vec<EdgeDoc>,
    pub fragments: Vec<FragmentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationDoc {
    pub name: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub event_type: String,
    pub relation: String,
    pub key: String,
    pub timestamp: Micros,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
    pub fragments: Vec<EventIdx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentDoc {
    pub root: String,
    pub events: Vec<String>,
}

impl DatabaseDocument {
    pub fn from_database(db: &EventDatabase) -> Self {
        let id = |e: EventIdx| db.id(e);
        DatabaseDocument {
            root: db.root_relation().name.clone(),
            relations: db
                .relations()
                .iter()
                .map(|r| RelationDoc {
                    name: r.name.clone(),
                    label: r.label.clone(),
                })
                .collect(),
            events: (0..db.len() as EventIdx)
                .map(|e| {
                    let ev = db.event(e);
                    EventDoc {
                        id: id(e),
                        event_type: db.label(e).to_string(),
                        relation: db.relation_name(e).to_string(),
                        key: ev.key.clone(),
                        timestamp: ev.timestamp,
                        attrs: ev.attrs.clone(),
                        fragments: db.membership(e).to_vec(),
                    }
                })
                .collect(),
            edges: db
                .edges()
                .iter()
                .map(|&(a, b)| EdgeDoc {
                    source: id(a),
                    target: id(b),
                })
                .collect(),
            fragments: db
                .fragments()
                .iter()
                .map(|f| FragmentDoc {
                    root: id(f.root),
                    events: f.events.iter().map(|&e| id(e)).collect(),
                })
                .collect(),
        }
    }

    pub fn into_database(self) -> Result<EventDatabase> {
        let relations: Vec<RelationInfo> = self
            .relations
            .into_iter()
            .map(|r| RelationInfo {
                name: r.name,
                label: r.label,
            })
            .collect();
        let root = relations
            .iter()
            .position(|r| r.name == self.root)
            .ok_or_else(|| Error::UnknownRelation(self.root.clone()))?;
        let mut index: BTreeMap<String, EventIdx> = BTreeMap::new();
        let mut events = Vec::with_capacity(self.events.len());
        for (i, e) in self.events.into_iter().enumerate() {
            let relation = relations
                .iter()
                .position(|r| r.name == e.relation)
                .ok_or_else(|| Error::UnknownRelation(e.relation.clone()))?;
            index.insert(e.id, i as EventIdx);
            events.push(Event {
                relation: relation as u16,
                key: e.key,
                timestamp: e.timestamp,
                attrs: e.attrs,
            });
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Invariant(format!("reference to unknown event `{id}`")))
        };
        let edges = self
            .edges
            .iter()
            .map(|e| Ok((lookup(&e.source)?, lookup(&e.target)?)))
            .collect::<Result<Vec<_>>>()?;
        let fragments = self
            .fragments
            .iter()
            .map(|f| {
                Ok(Fragment {
                    root: lookup(&f.root)?,
                    events: f.events.iter().map(|e| lookup(e)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EventDatabase::from_parts(relations, root as u16, events, edges, fragments)
    }
}

/// Writes the database as a single compact JSON document.
pub fn save_database(db: &EventDatabase, out: impl Write) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    serde_json::to_writer(&mut out, &DatabaseDocument::from_database(db))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_database(input: impl Read) -> Result<EventDatabase> {
    let doc: DatabaseDocument = serde_json::from_reader(std::io::BufReader::new(input))?;
    doc.into_database()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcegDocument {
    pub views: Vec<String>,
    pub types: Vec<TypeDoc>,
    pub edges: Vec<TypeEdgeDoc>,
    pub start: BTreeMap<String, usize>,
    pub end: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDoc {
    pub id: String,
    pub label: String,
    pub quantity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeEdgeDoc {
    pub from: String,
    pub to: String,
    pub quantity: usize,
    #[serde(rename = "in")]
    pub card_in: [u32; 2],
    #[serde(rename = "out")]
    pub card_out: [u32; 2],
}

/// Type ids are `t0, t1, ...` in label order.
pub fn aceg_document(aceg: &AggregatedCeg) -> AcegDocument {
    let ids: BTreeMap<&str, String> = aceg
        .types
        .keys()
        .enumerate()
        .map(|(i, t)| (t.as_str(), format!("t{i}")))
        .collect();
    AcegDocument {
        views: aceg.source_views.iter().cloned().collect(),
        types: aceg
            .types
            .iter()
            .map(|(label, &quantity)| TypeDoc {
                id: ids[label.as_str()].clone(),
                label: label.clone(),
                quantity,
            })
            .collect(),
        edges: aceg
            .edges
            .iter()
            .map(|((a, b), s)| TypeEdgeDoc {
                from: ids[a.as_str()].clone(),
                to: ids[b.as_str()].clone(),
                quantity: s.quantity,
                card_in: [s.card_in.0, s.card_in.1],
                card_out: [s.card_out.0, s.card_out.1],
            })
            .collect(),
        start: aceg.start_quantity.clone(),
        end: aceg.end_quantity.clone(),
    }
}
