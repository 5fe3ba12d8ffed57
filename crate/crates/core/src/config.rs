//! The declarative run configuration (JSON).
//!
//! ```json
//! {
//!   "source": {
//!     "dir": "data",
//!     "root": "purchase_orders",
//!     "tables": [
//!       { "name": "purchase_orders", "file": "purchase_orders.csv",
//!         "pk": "order_id", "timestamp": "created_at",
//!         "label": "Receive Purchase Order", "fks": [] }
//!     ]
//!   },
//!   "cpt": { "relations": ["purchase_orders", "order_items"],
//!            "edges": [{ "from": "purchase_orders", "to": "order_items" }] }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::GeneratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<CptDocument>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Directory that table files are resolved against. Relative to the
    /// config file when the config was loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub root: String,
    pub tables: Vec<TableConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub name: String,
    pub file: PathBuf,
    pub pk: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub fks: Vec<FkConfig>,
    /// Extra columns carried into the event payload.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attrs: Vec<String>,
    /// Identifier type of the primary key; defaults to the relation name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FkConfig {
    pub column: String,
    pub references: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CptDocument {
    pub relations: Vec<String>,
    #[serde(default)]
    pub edges: Vec<CptEdge>,
    /// Use the transitive closure of the edges instead of the covering edges.
    #[serde(default)]
    pub transitive_closure: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CptEdge {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Dot,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Case projection root for aggregation and flattening; defaults to the
    /// source root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<String>,
    /// Exclude events without causes from cycle-time aggregates.
    #[serde(default)]
    pub exclude_start_events: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Thresholds {
    /// Traffic-light cutoffs `[green_max, orange_max]` in microseconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_time_us: Option<[i64; 2]>,
}

impl RunConfig {
    /// Reads a config file. Relative `source.dir` and `output.dir` are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigFile {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let dir = config.source.dir.take().unwrap_or_default();
        config.source.dir = Some(base.join(dir));
        if let Some(out) = config.output.dir.take() {
            config.output.dir = Some(base.join(out));
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<()> {
        if let Some([lo, hi]) = self.thresholds.cycle_time_us {
            if lo >= hi {
                return Err(Error::Config(format!(
                    "cycle-time thresholds must be strictly increasing, got [{lo}, {hi}]"
                )));
            }
        }
        if let Some(g) = &self.generator {
            g.check()?;
        }
        let mut names: Vec<&str> = self.source.tables.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("table `{}` configured twice", w[0])));
        }
        if !names.contains(&self.source.root.as_str()) {
            return Err(Error::UnknownRelation(self.source.root.clone()));
        }
        Ok(())
    }

    pub fn source_dir(&self) -> PathBuf {
        self.source
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Case projection root: `output.root` or the source root.
    pub fn projection_root(&self) -> &str {
        self.output.root.as_deref().unwrap_or(&self.source.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "source": { "root": "a", "tables": [
            { "name": "a", "file": "a.csv", "pk": "id", "timestamp": "ts" }
        ] }
    }"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.source.root, "a");
        assert!(c.cpt.is_none());
        assert_eq!(c.projection_root(), "a");
    }

    #[test]
    fn syntax_error_has_location() {
        let err = RunConfig::parse("{\n  \"source\": [,\n}").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_increasing_thresholds() {
        let text = MINIMAL.replacen('{', r#"{ "thresholds": { "cycle_time_us": [5, 5] },"#, 1);
        assert!(matches!(RunConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_unknown_root() {
        let text = MINIMAL.replace(r#""root": "a""#, r#""root": "b""#);
        assert!(matches!(RunConfig::parse(&text), Err(Error::UnknownRelation(r)) if r == "b"));
    }
}
