//! JSON, DOT and CSV writers.

pub mod csv;
pub mod dot;
pub mod json;

pub use dot::{aceg_to_dot, ceg_to_dot, CycleTimeColors};
pub use json::{aceg_document, load_database, save_database, AcegDocument, DatabaseDocument};
