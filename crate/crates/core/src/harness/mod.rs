//! Experiment configuration, batch execution and report emission.

pub mod config;
pub mod convergence;
pub mod report;
pub mod run;

pub use config::{CaseSpec, ExperimentConfig, ReportFormat, Theorem};
pub use convergence::{convergence_batch, convergence_study};
pub use report::{
    emit_convergence, emit_report, parse_csv, parse_json, ConvergenceTable, InequalityReport, RowStatus, RowSummary,
};
pub use run::{equality_diagnostics, patch_equality_diagnostics, run_batch, run_case, run_transport, RunKind};
