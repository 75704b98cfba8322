//! Experiment runner for the integratorlab verification suites.
//!
//! Each subcommand reads an [`ExperimentConfig`] (a `key = value` file layered
//! under command-line flags), runs one suite, writes CSV files with 12
//! significant digits, prints a summary and exits with 0 exactly when every
//! pass flag of the suite is true.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod suites;
pub mod verify;

pub use cli::{run_subcommand, run_with};
pub use config::{ExperimentConfig, OpKind, OpSpec, Overrides};
pub use error::{CliError, CliResult};
pub use report::{emit_csv, render_csv, CheckOutcome, CsvRecord};
pub use verify::{Verifier, VerifyPlan};
