//! Causal event graphs from relational event data.
//!
//! Tables are joined along their foreign keys into causally connected
//! tuples; a causal process template turns every tuple into a small graph
//! of events, and the union of these graphs is the event database. On top
//! of it: aggregation into type-level graphs with quantities and
//! cardinalities, cycle-time KPIs, temporal violations, a directly-follows
//! baseline and conformance metrics.

pub mod aceg;
pub mod analysis;
pub mod catalog;
pub mod ceg;
pub mod config;
pub mod cpt;
mod dsu;
pub mod error;
pub mod export;
pub mod generator;
pub mod pipeline;
pub mod report;
pub mod time;

pub use error::{Error, Result};
