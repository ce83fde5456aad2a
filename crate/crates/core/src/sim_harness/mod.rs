//! Scenario loading, deterministic execution and reports.

mod report;
mod run;
mod scenario;
mod suite;

use thiserror::Error;

use crate::key_fabric::FabricError;
use crate::trust_analyzer::AnalysisError;

pub use report::{emit_report, CoalitionReport, Format, RunReport, WireRecord};
pub use run::{execute, link_key_bits, run_scenario, Execution};
pub use scenario::{parse_scenario, Protocol, Scenario, Tap};
pub use suite::{builtin_scenarios, invariant_suite, CheckOutcome};

/// Everything here is a configuration problem; protocol aborts are part of
/// a successful report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
