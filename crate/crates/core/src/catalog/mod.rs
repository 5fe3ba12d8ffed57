//! The relational source model: schemas, the catalog, table instances and
//! the left outer join that yields causally connected tuples.

mod join;
mod load;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::report::{Issue, IssueKind, ValidationReport};
use crate::time::Micros;

pub use join::{left_outer_join, CausallyConnectedTuple, JoinPlan, JoinStep, Link};
pub use load::{catalog_from_config, load_catalog};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrType {
    /// Identifier type; the payload names the identifier domain.
    Identifier(String),
    Timestamp,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub ty: AttrType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, ty: AttrType) -> Self {
        Attribute {
            name: name.into(),
            ty,
        }
    }
}

/// A relation schema. The first attribute is the primary key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    pub attrs: Vec<Attribute>,
    pub timestamp_attr: Option<String>,
    /// Event-type label of rows of this relation.
    pub label: String,
}

impl RelationSchema {
    /// Schema with a primary key of identifier type `name` and a timestamp
    /// attribute. The label defaults to the relation name.
    pub fn new(
        name: impl Into<String>,
        pk: impl Into<String>,
        timestamp: impl Into<String>,
    ) -> Self {
        let name = name.into();
        let timestamp = timestamp.into();
        RelationSchema {
            attrs: vec![
                Attribute::new(pk, AttrType::Identifier(name.clone())),
                Attribute::new(timestamp.clone(), AttrType::Timestamp),
            ],
            label: name.clone(),
            name,
            timestamp_attr: Some(timestamp),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_attr(mut self, name: impl Into<String>, ty: AttrType) -> Self {
        self.attrs.push(Attribute::new(name, ty));
        self
    }

    pub fn with_id_type(mut self, id_type: impl Into<String>) -> Self {
        if let Some(first) = self.attrs.first_mut() {
            first.ty = AttrType::Identifier(id_type.into());
        }
        self
    }

    pub fn id_attr(&self) -> Option<&Attribute> {
        self.attrs.first()
    }

    pub fn id_type(&self) -> Option<&str> {
        match self.attrs.first().map(|a| &a.ty) {
            Some(AttrType::Identifier(t)) => Some(t),
            _ => None,
        }
    }

    pub fn attr(&self, name: &str) -> Option<&Attribute> {
        self.attrs.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ForeignKey {
    pub from_relation: String,
    pub from_attr: String,
    pub to_relation: String,
}

impl ForeignKey {
    pub fn new(
        from_relation: impl Into<String>,
        from_attr: impl Into<String>,
        to_relation: impl Into<String>,
    ) -> Self {
        ForeignKey {
            from_relation: from_relation.into(),
            from_attr: from_attr.into(),
            to_relation: to_relation.into(),
        }
    }
}

/// A set of relation schemas plus their foreign keys. Schemas are kept
/// sorted by name, so relation indices are stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    schemas: Vec<RelationSchema>,
    foreign_keys: Vec<ForeignKey>,
}

impl Catalog {
    pub fn new(mut schemas: Vec<RelationSchema>, mut foreign_keys: Vec<ForeignKey>) -> Self {
        schemas.sort_by(|a, b| a.name.cmp(&b.name));
        foreign_keys.sort();
        foreign_keys.dedup();
        Catalog {
            schemas,
            foreign_keys,
        }
    }

    pub fn schemas(&self) -> &[RelationSchema] {
        &self.schemas
    }

    pub fn foreign_keys(&self) -> &[ForeignKey] {
        &self.foreign_keys
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.schemas
            .binary_search_by(|s| s.name.as_str().cmp(name))
            .ok()
    }

    pub fn schema(&self, name: &str) -> Option<&RelationSchema> {
        self.index_of(name).map(|i| &self.schemas[i])
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    /// Foreign keys declared on `relation`, in catalog order.
    pub fn outgoing<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a ForeignKey> + 'a {
        self.foreign_keys
            .iter()
            .filter(move |fk| fk.from_relation == relation)
    }

    /// True if a foreign key links the two relations in either direction.
    pub fn linked(&self, a: &str, b: &str) -> bool {
        self.foreign_keys.iter().any(|fk| {
            (fk.from_relation == a && fk.to_relation == b)
                || (fk.from_relation == b && fk.to_relation == a)
        })
    }
}

/// Checks the catalog against the relational-schema rules: identifier
/// primary keys, pairwise distinct primary-key identifier types, no
/// dangling foreign keys, and a timestamp attribute per relation.
pub fn validate_catalog(catalog: &Catalog) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut by_id_type: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for schema in catalog.schemas() {
        match schema.id_type() {
            Some(t) => by_id_type.entry(t).or_default().push(schema.name.clone()),
            None => report.push(Issue::error(IssueKind::PrimaryKeyNotIdentifier {
                relation: schema.name.clone(),
            })),
        }
    }
    for (id_type, relations) in &by_id_type {
        if relations.len() > 1 {
            report.push(Issue::error(IssueKind::DuplicateIdType {
                relations: relations.clone(),
                id_type: id_type.to_string(),
            }));
        }
    }

    let mut dangling: BTreeSet<(String, String)> = BTreeSet::new();
    for schema in catalog.schemas() {
        for attr in schema.attrs.iter().skip(1) {
            if let AttrType::Identifier(t) = &attr.ty {
                if !by_id_type.contains_key(t.as_str())
                    && dangling.insert((schema.name.clone(), attr.name.clone()))
                {
                    report.push(Issue::error(IssueKind::DanglingForeignKey {
                        relation: schema.name.clone(),
                        attr: attr.name.clone(),
                        target: t.clone(),
                    }));
                }
            }
        }
    }
    for fk in catalog.foreign_keys() {
        let ok = catalog
            .schema(&fk.from_relation)
            .is_some_and(|s| s.attr(&fk.from_attr).is_some())
            && catalog.schema(&fk.to_relation).is_some();
        if !ok && dangling.insert((fk.from_relation.clone(), fk.from_attr.clone())) {
            report.push(Issue::error(IssueKind::DanglingForeignKey {
                relation: fk.from_relation.clone(),
                attr: fk.from_attr.clone(),
                target: fk.to_relation.clone(),
            }));
        }
    }

    for schema in catalog.schemas() {
        let ok = schema
            .timestamp_attr
            .as_deref()
            .and_then(|t| schema.attr(t))
            .is_some_and(|a| a.ty == AttrType::Timestamp);
        if !ok {
            report.push(Issue::error(IssueKind::MissingTimestamp {
                relation: schema.name.clone(),
            }));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub key: String,
    pub timestamp: Micros,
    /// Non-null foreign-key values by attribute name.
    pub fks: BTreeMap<String, String>,
    pub attrs: BTreeMap<String, String>,
}

impl Row {
    pub fn new(key: impl Into<String>, timestamp: Micros) -> Self {
        Row {
            key: key.into(),
            timestamp,
            fks: BTreeMap::new(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn with_fk(mut self, attr: impl Into<String>, value: impl Into<String>) -> Self {
        self.fks.insert(attr.into(), value.into());
        self
    }

    pub fn fk(&self, attr: &str) -> Option<&str> {
        self.fks.get(attr).map(String::as_str)
    }
}

/// The rows of one relation, indexed by primary key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInstance {
    relation: String,
    rows: Vec<Row>,
    index: HashMap<String, u32>,
}

impl RelationInstance {
    pub fn new(relation: impl Into<String>, rows: Vec<Row>) -> Result<Self> {
        let relation = relation.into();
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if index.insert(row.key.clone(), i as u32).is_some() {
                return Err(Error::DuplicateKey {
                    table: relation,
                    key: row.key.clone(),
                });
            }
        }
        Ok(RelationInstance {
            relation,
            rows,
            index,
        })
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, idx: u32) -> &Row {
        &self.rows[idx as usize]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn position(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn get(&self, key: &str) -> Option<&Row> {
        self.position(key).map(|i| self.row(i))
    }
}

/// A catalog together with one instance per relation, checked for
/// referential integrity.
#[derive(Debug, Clone)]
pub struct Dataset {
    catalog: Catalog,
    instances: Vec<RelationInstance>,
}

impl Dataset {
    pub fn new(catalog: Catalog, instances: Vec<RelationInstance>) -> Result<Self> {
        let mut slots: Vec<Option<RelationInstance>> = vec![None; catalog.len()];
        for inst in instances {
            let idx = catalog.require(inst.relation())?;
            slots[idx] = Some(inst);
        }
        let instances = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| match s {
                Some(inst) => Ok(inst),
                None => RelationInstance::new(catalog.schemas()[i].name.clone(), Vec::new()),
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset { catalog, instances };
        ds.check_references()?;
        Ok(ds)
    }

    fn check_references(&self) -> Result<()> {
        for fk in self.catalog.foreign_keys() {
            let from = self.instance(&fk.from_relation)?;
            let to = self.instance(&fk.to_relation)?;
            for row in from.rows() {
                if let Some(value) = row.fk(&fk.from_attr) {
                    if to.position(value).is_none() {
                        return Err(Error::DanglingReference {
                            table: fk.from_relation.clone(),
                            row: row.key.clone(),
                            column: fk.from_attr.clone(),
                            value: value.to_string(),
                            references: fk.to_relation.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn instances(&self) -> &[RelationInstance] {
        &self.instances
    }

    pub fn instance(&self, relation: &str) -> Result<&RelationInstance> {
        Ok(&self.instances[self.catalog.require(relation)?])
    }

    pub fn instance_at(&self, idx: usize) -> &RelationInstance {
        &self.instances[idx]
    }

    /// Row counts per relation, in catalog order.
    pub fn row_counts(&self) -> Vec<(&str, usize)> {
        self.catalog
            .schemas()
            .iter()
            .zip(&self.instances)
            .map(|(s, i)| (s.name.as_str(), i.len()))
            .collect()
    }

    /// The non-null (relation, primary key) pairs of a tuple.
    pub fn pk_pairs(&self, tuple: &CausallyConnectedTuple) -> BTreeSet<(String, String)> {
        tuple
            .slots()
            .iter()
            .enumerate()
            .filter_map(|(rel, slot)| {
                slot.map(|row| {
                    (
                        self.catalog.schemas()[rel].name.clone(),
                        self.instances[rel].row(row).key.clone(),
                    )
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shop_catalog() -> Catalog {
        Catalog::new(
            vec![
                RelationSchema::new("purchase_orders", "order_id", "created_at"),
                RelationSchema::new("order_items", "item_id", "picked_at")
                    .with_attr("order_id", AttrType::Identifier("purchase_orders".into()))
                    .with_attr("shipment_id", AttrType::Identifier("shipments".into()))
                    .with_attr("pickup_id", AttrType::Identifier("customer_pickups".into())),
                RelationSchema::new("shipments", "shipment_id", "shipped_at"),
                RelationSchema::new("customer_pickups", "pickup_id", "picked_up_at"),
            ],
            vec![
                ForeignKey::new("order_items", "order_id", "purchase_orders"),
                ForeignKey::new("order_items", "shipment_id", "shipments"),
                ForeignKey::new("order_items", "pickup_id", "customer_pickups"),
            ],
        )
    }

    #[test]
    fn well_formed_catalog_has_empty_report() {
        assert!(validate_catalog(&shop_catalog()).is_empty());
    }

    #[test]
    fn shared_id_type_is_one_violation() {
        let catalog = Catalog::new(
            vec![
                RelationSchema::new("a", "id", "ts").with_id_type("int"),
                RelationSchema::new("b", "id", "ts").with_id_type("int"),
            ],
            vec![],
        );
        let report = validate_catalog(&catalog);
        assert_eq!(report.issues.len(), 1);
        assert!(
            matches!(&report.issues[0].kind, IssueKind::DuplicateIdType { relations, .. } if relations == &["a", "b"])
        );
    }

    #[test]
    fn dangling_fk_is_one_violation() {
        let catalog = Catalog::new(
            vec![RelationSchema::new("items", "id", "ts")
                .with_attr("ship", AttrType::Identifier("shipments".into()))],
            vec![ForeignKey::new("items", "ship", "shipments")],
        );
        let report = validate_catalog(&catalog);
        assert_eq!(report.issues.len(), 1, "{report}");
        assert!(matches!(
            report.issues[0].kind,
            IssueKind::DanglingForeignKey { .. }
        ));
    }

    #[test]
    fn missing_timestamp_and_non_identifier_pk_are_reported() {
        let mut schema = RelationSchema::new("a", "id", "ts");
        schema.timestamp_attr = None;
        schema.attrs[0].ty = AttrType::Text;
        let report = validate_catalog(&Catalog::new(vec![schema], vec![]));
        assert_eq!(report.issues.len(), 2);
    }

    #[test]
    fn duplicate_primary_key_is_rejected() {
        let err = RelationInstance::new("a", vec![Row::new("x", 1), Row::new("x", 2)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateKey { key, .. } if key == "x"));
    }

    #[test]
    fn dataset_rejects_dangling_reference() {
        let catalog = shop_catalog();
        let orders = RelationInstance::new("purchase_orders", vec![Row::new("or1", 0)]).unwrap();
        let items = RelationInstance::new(
            "order_items",
            vec![
                Row::new("pi1", 1).with_fk("order_id", "or1"),
                Row::new("pi_x", 2).with_fk("order_id", "or9"),
            ],
        )
        .unwrap();
        let err = Dataset::new(catalog, vec![orders, items]).unwrap_err();
        match err {
            Error::DanglingReference { row, value, .. } => {
                assert_eq!(row, "pi_x");
                assert_eq!(value, "or9");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
