//! Batch front end: dataset ingestion, spec and run configuration parsing,
//! synthetic-data generation, result export, and the `bta` command-line
//! surface.

pub mod commands;
pub mod error;
pub mod export;
pub mod panel;
pub mod simulate;
pub mod spec_file;
pub mod store;

pub use error::CliError;
