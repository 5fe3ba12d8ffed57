//! Deterministic synthetic order-to-cash data.
//!
//! Orders are broken down into items, every item is picked, and picks are
//! fulfilled either by a shipment (possibly split in two, possibly shared
//! with the previous order) or by a customer pickup. Every shipment gets an
//! invoice. Two anomalies can be injected: picks back-dated before their
//! item was extracted, and items added to an order after it was fulfilled.
//!
//! The random stream does not depend on the rates: the same seed yields the
//! same orders, items and timings, and a rate only decides which of the
//! pre-drawn anomalies are applied.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Dataset, RelationInstance, Row};
use crate::config::{CptDocument, CptEdge, FkConfig, RunConfig, SourceConfig, TableConfig};
use crate::error::{Error, Result};
use crate::time::{format_timestamp, Micros};

const MINUTE: Micros = 60_000_000;
const HOUR: Micros = 60 * MINUTE;
/// 2024-01-01T00:00:00Z
const EPOCH: Micros = 1_704_067_200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub orders: usize,
    /// Inclusive range of items per order.
    pub items_per_order: [u32; 2],
    /// Chance that an order joins the previous order's shipment.
    pub batching_probability: f64,
    pub pickup_probability: f64,
    /// Chance that a shipped order with two or more items ships in two parts.
    pub split_shipment_probability: f64,
    /// Chance per item that its pick is back-dated before the item.
    pub violation_rate: f64,
    /// Chance per order that one more item is added after fulfilment.
    pub late_item_rate: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            orders: 1000,
            items_per_order: [1, 5],
            batching_probability: 0.1,
            pickup_probability: 0.2,
            split_shipment_probability: 0.1,
            violation_rate: 0.0,
            late_item_rate: 0.0,
            seed: 42,
        }
    }
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<()> {
        let [lo, hi] = self.items_per_order;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!(
                "items_per_order must be 1 <= min <= max, got [{lo}, {hi}]"
            )));
        }
        for (name, p) in [
            ("batching_probability", self.batching_probability),
            ("pickup_probability", self.pickup_probability),
            (
                "split_shipment_probability",
                self.split_shipment_probability,
            ),
            ("violation_rate", self.violation_rate),
            ("late_item_rate", self.late_item_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// What was generated and injected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub seed: u64,
    pub orders: usize,
    pub items: usize,
    pub shipments: usize,
    pub pickups: usize,
    pub invoices: usize,
    pub batched_orders: usize,
    pub split_orders: usize,
    /// Item → pick edges that could have been back-dated.
    pub eligible_for_backdating: usize,
    pub backdated_picks: usize,
    pub late_items: usize,
}

pub struct Synthetic {
    pub dataset: Dataset,
    pub report: GeneratorReport,
}

struct Item {
    order: usize,
    created: Micros,
    picked: Micros,
    fulfilment: Fulfilment,
}

#[derive(Clone, Copy)]
enum Fulfilment {
    Shipment(usize),
    Pickup(usize),
}

struct PreDrawn {
    order_gap: Micros,
    items: Vec<(Micros, Micros, f64, Micros)>,
    pickup: f64,
    split: f64,
    batch: f64,
    fulfil_delay: [Micros; 2],
    late: f64,
    late_delays: [Micros; 3],
}

fn draw(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> PreDrawn {
    let order_gap = rng.gen_range(MINUTE..10 * MINUTE);
    let n = rng.gen_range(cfg.items_per_order[0]..=cfg.items_per_order[1]);
    let items = (0..n)
        .map(|_| {
            (
                rng.gen_range(MINUTE..5 * MINUTE),
                rng.gen_range(MINUTE..20 * MINUTE),
                rng.gen::<f64>(),
                rng.gen_range(MINUTE..10 * MINUTE),
            )
        })
        .collect();
    PreDrawn {
        order_gap,
        items,
        pickup: rng.gen(),
        split: rng.gen(),
        batch: rng.gen(),
        fulfil_delay: [
            rng.gen_range(10 * MINUTE..4 * HOUR),
            rng.gen_range(10 * MINUTE..4 * HOUR),
        ],
        late: rng.gen(),
        late_delays: [
            rng.gen_range(HOUR..48 * HOUR),
            rng.gen_range(MINUTE..20 * MINUTE),
            rng.gen_range(10 * MINUTE..4 * HOUR),
        ],
    }
}

fn key(prefix: &str, i: usize) -> String {
    format!("{prefix}{i:07}")
}

pub const ORDERS: &str = "orders";
pub const ORDER_ITEMS: &str = "order_items";
pub const PICKINGS: &str = "pickings";
pub const SHIPMENTS: &str = "shipments";
pub const PICKUPS: &str = "pickups";
pub const INVOICES: &str = "invoices";

/// Table layout of the generated data. Files are `<name>.csv`.
pub fn table_configs() -> Vec<TableConfig> {
    let table = |name: &str, pk: &str, ts: &str, label: &str, fks: &[(&str, &str)]| TableConfig {
        name: name.into(),
        file: format!("{name}.csv").into(),
        pk: pk.into(),
        timestamp: ts.into(),
        label: Some(label.into()),
        fks: fks
            .iter()
            .map(|(c, r)| FkConfig {
                column: c.to_string(),
                references: r.to_string(),
            })
            .collect(),
        attrs: Vec::new(),
        id_type: None,
    };
    vec![
        table(ORDERS, "order_id", "created_at", "Receive Order", &[]),
        table(
            ORDER_ITEMS,
            "item_id",
            "created_at",
            "Extract Order Item",
            &[("order_id", ORDERS)],
        ),
        table(
            PICKINGS,
            "pick_id",
            "picked_at",
            "Pick Order Item",
            &[
                ("item_id", ORDER_ITEMS),
                ("shipment_id", SHIPMENTS),
                ("pickup_id", PICKUPS),
            ],
        ),
        table(
            SHIPMENTS,
            "shipment_id",
            "created_at",
            "Register Shipment",
            &[],
        ),
        table(
            PICKUPS,
            "pickup_id",
            "created_at",
            "Register Customer Pickup",
            &[],
        ),
        table(
            INVOICES,
            "invoice_id",
            "posted_at",
            "Post Invoice",
            &[("shipment_id", SHIPMENTS)],
        ),
    ]
}

/// orders → order_items → pickings → {shipments → invoices, pickups}
pub fn template() -> CptDocument {
    let edge = |from: &str, to: &str| CptEdge {
        from: from.into(),
        to: to.into(),
    };
    CptDocument {
        relations: [ORDERS, ORDER_ITEMS, PICKINGS, SHIPMENTS, PICKUPS, INVOICES]
            .map(String::from)
            .to_vec(),
        edges: vec![
            edge(ORDERS, ORDER_ITEMS),
            edge(ORDER_ITEMS, PICKINGS),
            edge(PICKINGS, SHIPMENTS),
            edge(PICKINGS, PICKUPS),
            edge(SHIPMENTS, INVOICES),
        ],
        transitive_closure: false,
    }
}

/// Run configuration for data written by [`write_synthetic`] into `dir`.
pub fn run_config(cfg: &GeneratorConfig) -> RunConfig {
    RunConfig {
        source: SourceConfig {
            dir: None,
            root: ORDERS.into(),
            tables: table_configs(),
        },
        cpt: Some(template()),
        output: Default::default(),
        thresholds: Default::default(),
        generator: Some(cfg.clone()),
    }
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Synthetic> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GeneratorReport {
        seed: cfg.seed,
        orders: cfg.orders,
        ..Default::default()
    };

    let mut orders: Vec<Micros> = Vec::with_capacity(cfg.orders);
    let mut items: Vec<Item> = Vec::new();
    let mut shipments: Vec<Micros> = Vec::new();
    let mut pickups: Vec<Micros> = Vec::new();
    // Shipment the next order may join.
    let mut open_shipment: Option<usize> = None;
    let mut clock = EPOCH;

    for o in 0..cfg.orders {
        let d = draw(&mut rng, cfg);
        clock += d.order_gap;
        let created = clock;
        orders.push(created);

        let first = items.len();
        let mut extract = created;
        for &(extract_gap, pick_gap, coin, backdate) in &d.items {
            extract += extract_gap;
            let mut picked = extract + pick_gap;
            if coin < cfg.violation_rate {
                picked = extract - backdate;
                report.backdated_picks += 1;
            }
            report.eligible_for_backdating += 1;
            items.push(Item {
                order: o,
                created: extract,
                picked,
                fulfilment: Fulfilment::Pickup(0),
            });
        }
        let n = items.len() - first;
        let last_pick = |range: std::ops::Range<usize>, items: &[Item]| {
            items[range].iter().map(|i| i.picked).max().unwrap()
        };

        let last_fulfilment;
        if d.pickup < cfg.pickup_probability {
            last_fulfilment = last_pick(first..items.len(), &items) + d.fulfil_delay[0];
            pickups.push(last_fulfilment);
            for it in &mut items[first..] {
                it.fulfilment = Fulfilment::Pickup(pickups.len() - 1);
            }
            open_shipment = None;
        } else if n >= 2 && d.split < cfg.split_shipment_probability {
            report.split_orders += 1;
            let mid = first + n / 2;
            let a = last_pick(first..mid, &items) + d.fulfil_delay[0];
            let b = last_pick(mid..items.len(), &items).max(a) + d.fulfil_delay[1];
            shipments.push(a);
            shipments.push(b);
            for (i, it) in items[first..].iter_mut().enumerate() {
                let s = if first + i < mid {
                    shipments.len() - 2
                } else {
                    shipments.len() - 1
                };
                it.fulfilment = Fulfilment::Shipment(s);
            }
            last_fulfilment = b;
            open_shipment = None;
        } else {
            let ready = last_pick(first..items.len(), &items) + d.fulfil_delay[0];
            let s = match open_shipment.take() {
                Some(s) if d.batch < cfg.batching_probability => {
                    report.batched_orders += 1;
                    shipments[s] = shipments[s].max(ready);
                    s
                }
                _ => {
                    shipments.push(ready);
                    open_shipment = Some(shipments.len() - 1);
                    shipments.len() - 1
                }
            };
            for it in &mut items[first..] {
                it.fulfilment = Fulfilment::Shipment(s);
            }
            last_fulfilment = shipments[s];
        }

        if d.late < cfg.late_item_rate {
            // The order is extended after fulfilment; the new item ships on
            // its own.
            report.late_items += 1;
            let late_created = last_fulfilment + d.late_delays[0];
            let picked = late_created + d.late_delays[1];
            shipments.push(picked + d.late_delays[2]);
            items.push(Item {
                order: o,
                created: late_created,
                picked,
                fulfilment: Fulfilment::Shipment(shipments.len() - 1),
            });
        }
    }

    // A shipment's time may have moved while later orders joined it, so
    // invoices are placed last.
    let invoice_delay = {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1a7e);
        (0..shipments.len())
            .map(|_| rng.gen_range(HOUR..24 * HOUR))
            .collect::<Vec<_>>()
    };

    report.items = items.len();
    report.shipments = shipments.len();
    report.pickups = pickups.len();
    report.invoices = shipments.len();

    let order_rows = orders
        .iter()
        .enumerate()
        .map(|(i, &t)| Row::new(key("O", i), t))
        .collect();
    let item_rows = items
        .iter()
        .enumerate()
        .map(|(i, it)| Row::new(key("I", i), it.created).with_fk("order_id", key("O", it.order)))
        .collect();
    let pick_rows = items
        .iter()
        .enumerate()
        .map(|(i, it)| {
            let row = Row::new(key("K", i), it.picked).with_fk("item_id", key("I", i));
            match it.fulfilment {
                Fulfilment::Shipment(s) => row.with_fk("shipment_id", key("S", s)),
                Fulfilment::Pickup(p) => row.with_fk("pickup_id", key("C", p)),
            }
        })
        .collect();
    let shipment_rows = shipments
        .iter()
        .enumerate()
        .map(|(i, &t)| Row::new(key("S", i), t))
        .collect();
    let pickup_rows = pickups
        .iter()
        .enumerate()
        .map(|(i, &t)| Row::new(key("C", i), t))
        .collect();
    let invoice_rows = shipments
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            Row::new(key("V", i), t + invoice_delay[i]).with_fk("shipment_id", key("S", i))
        })
        .collect();

    let source = SourceConfig {
        dir: None,
        root: ORDERS.into(),
        tables: table_configs(),
    };
    let catalog = crate::catalog::catalog_from_config(&source)?;
    let instances = vec![
        RelationInstance::new(ORDERS, order_rows)?,
        RelationInstance::new(ORDER_ITEMS, item_rows)?,
        RelationInstance::new(PICKINGS, pick_rows)?,
        RelationInstance::new(SHIPMENTS, shipment_rows)?,
        RelationInstance::new(PICKUPS, pickup_rows)?,
        RelationInstance::new(INVOICES, invoice_rows)?,
    ];
    Ok(Synthetic {
        dataset: Dataset::new(catalog, instances)?,
        report,
    })
}

/// Writes one CSV per table of `tables`, in row order.
pub fn write_tables(ds: &Dataset, tables: &[TableConfig], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in tables {
        let inst = ds.instance(&t.name)?;
        let mut w = ::csv::Writer::from_path(dir.join(&t.file))?;
        let mut header = vec![t.pk.as_str(), t.timestamp.as_str()];
        header.extend(t.fks.iter().map(|f| f.column.as_str()));
        header.extend(t.attrs.iter().map(String::as_str));
        w.write_record(&header)?;
        for row in inst.rows() {
            let mut record = vec![row.key.clone(), format_timestamp(row.timestamp)];
            record.extend(
                t.fks
                    .iter()
                    .map(|f| row.fk(&f.column).unwrap_or("").to_string()),
            );
            record.extend(
                t.attrs
                    .iter()
                    .map(|a| row.attrs.get(a).cloned().unwrap_or_default()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Writes the tables, a ready-to-use `config.json` and
/// `generation_report.json` into `dir`.
pub fn write_synthetic(cfg: &GeneratorConfig, dir: &Path) -> Result<GeneratorReport> {
    let synthetic = generate(cfg)?;
    let config = run_config(cfg);
    write_tables(&synthetic.dataset, &config.source.tables, dir)?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&config)? + "\n",
    )?;
    std::fs::write(
        dir.join("generation_report.json"),
        serde_json::to_string_pretty(&synthetic.report)? + "\n",
    )?;
    Ok(synthetic.report)
}
