use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;

use super::{AttrType, Catalog, Dataset, ForeignKey, RelationInstance, RelationSchema, Row};
use crate::config::{SourceConfig, TableConfig};
use crate::error::{Error, Result};
use crate::time::parse_timestamp;

/// Builds the catalog described by `source` and parses one delimited
/// file (with header row) per table. Empty cells in foreign-key columns
/// are nulls.
pub fn load_catalog(source: &SourceConfig) -> Result<Dataset> {
    let catalog = catalog_from_config(source)?;
    let dir = source.dir.clone().unwrap_or_default();
    let instances = source
        .tables
        .par_iter()
        .map(|t| read_table(&dir, t))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(catalog, instances)
}

/// The catalog described by `source`, without reading any data.
pub fn catalog_from_config(source: &SourceConfig) -> Result<Catalog> {
    let id_types: BTreeMap<&str, String> = source
        .tables
        .iter()
        .map(|t| {
            (
                t.name.as_str(),
                t.id_type.clone().unwrap_or_else(|| t.name.clone()),
            )
        })
        .collect();
    let mut schemas = Vec::new();
    let mut fks = Vec::new();
    for t in &source.tables {
        let mut schema = RelationSchema::new(&t.name, &t.pk, &t.timestamp)
            .with_id_type(id_types[t.name.as_str()].clone());
        if let Some(label) = &t.label {
            schema = schema.with_label(label);
        }
        for fk in &t.fks {
            let target = id_types
                .get(fk.references.as_str())
                .ok_or_else(|| Error::UnknownRelation(fk.references.clone()))?;
            schema = schema.with_attr(&fk.column, AttrType::Identifier(target.clone()));
            fks.push(ForeignKey::new(&t.name, &fk.column, &fk.references));
        }
        for a in &t.attrs {
            schema = schema.with_attr(a, AttrType::Text);
        }
        schemas.push(schema);
    }
    Ok(Catalog::new(schemas, fks))
}

fn read_table(dir: &Path, table: &TableConfig) -> Result<RelationInstance> {
    let path = dir.join(&table.file);
    let file = File::open(&path).map_err(|source| Error::MissingTable {
        table: table.name.clone(),
        path: path.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                table: table.name.clone(),
                column: name.to_string(),
            })
    };
    let pk = column(&table.pk)?;
    let ts = column(&table.timestamp)?;
    let fk_cols = table
        .fks
        .iter()
        .map(|fk| Ok((fk.column.clone(), column(&fk.column)?)))
        .collect::<Result<Vec<_>>>()?;
    let attr_cols = table
        .attrs
        .iter()
        .map(|a| Ok((a.clone(), column(a)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let raw_ts = field(ts);
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| Error::Timestamp {
            table: table.name.clone(),
            row: n + 1,
            column: table.timestamp.clone(),
            value: raw_ts.to_string(),
        })?;
        let mut row = Row::new(field(pk), timestamp);
        for (name, i) in &fk_cols {
            let v = field(*i);
            if !v.is_empty() {
                row.fks.insert(name.clone(), v.to_string());
            }
        }
        for (name, i) in &attr_cols {
            row.attrs.insert(name.clone(), field(*i).to_string());
        }
        rows.push(row);
    }
    RelationInstance::new(&table.name, rows)
}
