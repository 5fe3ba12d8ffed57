//! `cpm`: build causal event graphs from relational tables and analyse them.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpm_core::aceg::{aggregate_level1, aggregate_level2, aggregate_level3, AggregatedCeg};
use cpm_core::analysis::{flatten_to_event_log, temporal_violations, violation_counts};
use cpm_core::ceg::{CegView, EventDatabase};
use cpm_core::config::{Format, RunConfig};
use cpm_core::cpt::CausalProcessTemplate;
use cpm_core::export::csv::{
    write_conformance_grid, write_event_log, write_violation_counts, write_violations,
};
use cpm_core::export::{
    aceg_document, aceg_to_dot, ceg_to_dot, load_database, save_database, CycleTimeColors,
};
use cpm_core::generator::{write_synthetic, GeneratorConfig};
use cpm_core::pipeline::{self, compare, kpi_report, BuildSummary};
use cpm_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cpm",
    version,
    about = "Causal event graphs from relational data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic order-to-cash dataset and a matching config.
    Generate {
        /// Config whose `generator` section is used; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        orders: Option<usize>,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Load, join and build; writes `database.json` and prints counts.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregated graphs at level 1 (per case), 2 (per structure) or 3 (all).
    Aggregate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cycle-time statistics and end-event / batching distributions (JSON).
    Kpi {
        #[command(flatten)]
        input: Input,
        /// Skip events without causes in event-type cycle times.
        #[arg(long)]
        exclude_start_events: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Causal edges whose cause is later than its effect (CSV).
    Violations {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Directly-follows baseline against the level-3 aggregated graph.
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Case projections as DOT, the database as JSON or the flattened log as CSV.
    Export {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
        /// Only the case projection with this id (`relation:key`).
        #[arg(long)]
        view: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    config: Option<PathBuf>,
    /// A database written by `build`; skips loading and joining.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Case projection root relation.
    #[arg(long)]
    root: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Dot,
    Json,
    Csv,
}

impl From<Format> for OutFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Dot => OutFormat::Dot,
            Format::Json => OutFormat::Json,
            Format::Csv => OutFormat::Csv,
        }
    }
}

struct Loaded {
    config: Option<RunConfig>,
    db: EventDatabase,
    cpt: Option<CausalProcessTemplate>,
    root: String,
}

impl Loaded {
    fn format(&self, flag: Option<OutFormat>, default: OutFormat) -> OutFormat {
        flag.or_else(|| self.config.as_ref()?.output.format.map(Into::into))
            .unwrap_or(default)
    }

    fn out_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        out_dir(flag, self.config.as_ref())
    }

    fn colors(&self) -> Option<CycleTimeColors> {
        self.config
            .as_ref()?
            .thresholds
            .cycle_time_us
            .map(CycleTimeColors::new)
    }

    fn projections(&self) -> Result<Vec<CegView>> {
        self.db.case_projection(&self.root)
    }
}

fn out_dir(flag: Option<PathBuf>, config: Option<&RunConfig>) -> PathBuf {
    flag.or_else(|| config?.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(input: Input) -> Result<Loaded> {
    let config = input.config.as_deref().map(RunConfig::load).transpose()?;
    let (db, cpt) = match (&input.db, &config) {
        (Some(path), _) => {
            let file = fs::File::open(path).map_err(|e| {
                Error::Config(format!("cannot open database {}: {e}", path.display()))
            })?;
            let db = load_database(io::BufReader::new(file))?;
            let cpt = match &config {
                Some(c) => Some(pipeline::build(c)?.cpt),
                None => None,
            };
            (db, cpt)
        }
        (None, Some(c)) => {
            let built = pipeline::build(c)?;
            report_warnings(&built);
            (built.db, Some(built.cpt))
        }
        (None, None) => return Err(Error::Config("either --config or --db is required".into())),
    };
    let root = input
        .root
        .or_else(|| config.as_ref().map(|c| c.projection_root().to_string()))
        .unwrap_or_else(|| {
            db.relations()[db.root_relation_index() as usize]
                .name
                .clone()
        });
    Ok(Loaded {
        config,
        db,
        cpt,
        root,
    })
}

fn report_warnings(built: &pipeline::Built) {
    for issue in &built.warnings.issues {
        eprintln!("{issue}");
    }
}

fn file_name(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<io::BufWriter<fs::File>> {
    fs::create_dir_all(dir)?;
    Ok(io::BufWriter::new(fs::File::create(dir.join(name))?))
}

/// Writes `name` into `--out` when given, to stdout otherwise.
fn emit(
    out: &Option<PathBuf>,
    name: &str,
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(dir) => {
            let mut w = create(dir, name)?;
            write(&mut w)?;
            w.flush()?;
            println!("wrote {}", dir.join(name).display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn json_pretty(value: &impl serde::Serialize, w: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_aceg(
    dir: &Path,
    stem: &str,
    aceg: &AggregatedCeg,
    format: OutFormat,
    db: &EventDatabase,
) -> Result<PathBuf> {
    let (name, body) = match format {
        OutFormat::Dot => {
            let counts = violation_counts(&temporal_violations(db));
            (format!("{stem}.dot"), aceg_to_dot(aceg, stem, &counts))
        }
        OutFormat::Json => (
            format!("{stem}.json"),
            serde_json::to_string_pretty(&aceg_document(aceg))? + "\n",
        ),
        OutFormat::Csv => {
            return Err(Error::Config(
                "aggregated graphs are exported as dot or json".into(),
            ))
        }
    };
    fs::create_dir_all(dir)?;
    fs::write(dir.join(&name), body)?;
    Ok(dir.join(name))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            orders,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => RunConfig::load(&path)?.generator.unwrap_or_default(),
                None => GeneratorConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = orders {
                cfg.orders = n;
            }
            let report = write_synthetic(&cfg, &out)?;
            println!(
                "{} orders, {} items, {} shipments, {} pickups, {} back-dated picks, {} late items -> {}",
                report.orders,
                report.items,
                report.shipments,
                report.pickups,
                report.backdated_picks,
                report.late_items,
                out.display()
            );
        }
        Command::Build { config, root, out } => {
            let config = RunConfig::load(&config)?;
            let built = pipeline::build(&config)?;
            report_warnings(&built);
            let root = root.unwrap_or_else(|| config.projection_root().to_string());
            let summary = BuildSummary::of(&built.db, &root)?;
            let dir = out_dir(out, Some(&config));
            let mut w = create(&dir, "database.json")?;
            save_database(&built.db, &mut w)?;
            w.flush()?;
            println!("{summary}");
            println!("wrote {}", dir.join("database.json").display());
        }
        Command::Aggregate {
            input,
            level,
            format,
            out,
        } => {
            let l = load(input)?;
            let format = l.format(format, OutFormat::Dot);
            let dir = l.out_dir(out);
            let views = l.projections()?;
            let acegs: Vec<(String, AggregatedCeg)> = match level {
                1 => views
                    .iter()
                    .map(|v| {
                        (
                            format!("aceg_l1_{}", file_name(&v.id())),
                            aggregate_level1(&l.db, v),
                        )
                    })
                    .collect(),
                2 => aggregate_level2(&l.db, &views)
                    .into_iter()
                    .enumerate()
                    .map(|(i, a)| (format!("aceg_l2_{}", i + 1), a))
                    .collect(),
                _ => vec![("aceg_l3".to_string(), aggregate_level3(&l.db, &views))],
            };
            for (stem, a) in &acegs {
                let path = write_aceg(&dir, stem, a, format, &l.db)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Kpi {
            input,
            exclude_start_events,
            out,
        } => {
            let l = load(input)?;
            let exclude = exclude_start_events
                || l.config
                    .as_ref()
                    .is_some_and(|c| c.output.exclude_start_events);
            let report = kpi_report(&l.db, &l.projections()?, exclude);
            emit(&out, "kpi.json", |w| json_pretty(&report, w))?;
        }
        Command::Violations { input, out } => {
            let l = load(input)?;
            let v = temporal_violations(&l.db);
            emit(&out, "violations.csv", |w| write_violations(&v, w))?;
            eprintln!("{} violations", v.len());
        }
        Command::Compare { input, format, out } => {
            let l = load(input)?;
            let cpt = l
                .cpt
                .as_ref()
                .ok_or_else(|| Error::Config("compare needs --config for the template".into()))?;
            let c = compare(&l.db, cpt, &l.root)?;
            let format = l.format(format, OutFormat::Csv);
            match (format, &out) {
                (OutFormat::Json, _) => {
                    let doc = serde_json::json!({
                        "dfg": { "score": c.dfg_score, "table": c.dfg_table },
                        "aceg": { "score": c.aceg_score, "table": c.aceg_table },
                    });
                    emit(&out, "comparison.json", |w| json_pretty(&doc, w))?;
                }
                (OutFormat::Dot, _) => {
                    return Err(Error::Config("compare writes csv or json".into()))
                }
                (OutFormat::Csv, Some(dir)) => {
                    for (name, table) in [
                        ("dfg_conformance.csv", &c.dfg_table),
                        ("aceg_conformance.csv", &c.aceg_table),
                    ] {
                        let mut w = create(dir, name)?;
                        write_conformance_grid(table, &mut w)?;
                        w.flush()?;
                    }
                    let mut w = create(dir, "aceg_violations.csv")?;
                    write_violation_counts(&c.aceg_table, &mut w)?;
                    w.flush()?;
                    println!("wrote conformance grids to {}", dir.display());
                }
                (OutFormat::Csv, None) => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    writeln!(lock, "# directly-follows graph")?;
                    write_conformance_grid(&c.dfg_table, &mut lock)?;
                    writeln!(lock, "# aggregated causal event graph")?;
                    write_conformance_grid(&c.aceg_table, &mut lock)?;
                }
            }
            // Keep stdout parseable when the JSON document goes there.
            if !matches!((format, &out), (OutFormat::Json, None)) {
                println!("dfg score: {}", c.dfg_score);
                println!("aceg score: {}", c.aceg_score);
            }
        }
        Command::Export {
            input,
            format,
            view,
            out,
        } => {
            let l = load(input)?;
            match l.format(format, OutFormat::Dot) {
                OutFormat::Json => emit(&out, "database.json", |w| save_database(&l.db, w))?,
                OutFormat::Csv => {
                    let log = flatten_to_event_log(&l.db, &l.root)?;
                    emit(&out, "event_log.csv", |w| write_event_log(&log, w))?;
                }
                OutFormat::Dot => {
                    let mut views = l.projections()?;
                    if let Some(id) = &view {
                        views.retain(|v| &v.id() == id);
                        if views.is_empty() {
                            return Err(Error::Config(format!("no case projection `{id}`")));
                        }
                    }
                    let dir = l.out_dir(out);
                    fs::create_dir_all(&dir)?;
                    for v in &views {
                        let name = format!("ceg_{}.dot", file_name(&v.id()));
                        fs::write(dir.join(&name), ceg_to_dot(&l.db, v, l.colors()))?;
                        println!("wrote {}", dir.join(name).display());
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                // Reports already tag each issue with its severity.
                Error::Validation(_) => eprintln!("{e}"),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
