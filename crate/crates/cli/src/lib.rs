//! Batch front end for `basket-core`.
//!
//! Reads JSON experiment configs, runs the requested pricing methods in
//! parallel, reproduces the built-in comparison tables and writes CSV or
//! Markdown reports. The `basket` binary is a thin wrapper over this crate.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod tables;

pub use config::{parse_config, ExperimentConfig, OutputFormat};
pub use error::{CliError, ConfigError};
pub use report::{emit_report, parse_csv_report, ReportRow};
pub use run::{run_price, PriceOutcome, RunSettings};
pub use tables::{reproduce_table, TableOptions, TableReport};
