//! Config-driven experiment runner with CSV/JSON reports and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod report;

pub use acceptance::{run_acceptance, run_criterion, CriterionOutcome, CRITERIA};
pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use report::{emit_report, Bracket, Check, RatioRow, RatioTable, Series, CSV_COLUMNS};
