//! Scenario ingestion, the per-tick pipeline, and trace/report emission.

pub mod managed;
pub mod output;
pub mod runner;
pub mod scenario;
pub mod system;

use thiserror::Error;

use crate::assurance::CaseError;
use crate::controller::ControllerError;
use crate::model::ModelError;
use crate::plant::PlantError;
use crate::taxonomy::{ClassificationError, TaxonomyError};

pub use managed::{run_managed, ManagedRun, ManagedSystem};
pub use output::{decision_log, trace_csv, write_outputs, TRACE_HEADER};
pub use runner::{run_scenario, RunOutput, RunReport, TraceRow};
pub use scenario::{Scenario, Trace};
pub use system::SystemDescription;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    /// Input rejected before tick 0; `field` is a dotted path.
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("fault: {0}")]
    Fault(String),
}

impl HarnessError {
    pub fn validation(field: &str, message: &str) -> Self {
        HarnessError::Validation {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation { .. } | HarnessError::Io { .. } => 2,
            HarnessError::Fault(_) => 1,
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::validation("model", &e.to_string())
    }
}

impl From<ControllerError> for HarnessError {
    fn from(e: ControllerError) -> Self {
        HarnessError::validation("controller", &e.to_string())
    }
}

impl From<PlantError> for HarnessError {
    fn from(e: PlantError) -> Self {
        match e {
            PlantError::SimulationFault(_) => HarnessError::Fault(e.to_string()),
            _ => HarnessError::validation("plant", &e.to_string()),
        }
    }
}

impl From<CaseError> for HarnessError {
    fn from(e: CaseError) -> Self {
        HarnessError::validation("safety_case", &e.to_string())
    }
}

impl From<TaxonomyError> for HarnessError {
    fn from(e: TaxonomyError) -> Self {
        HarnessError::validation("taxonomy", &e.to_string())
    }
}

impl From<ClassificationError> for HarnessError {
    fn from(e: ClassificationError) -> Self {
        HarnessError::validation("taxonomy", &e.to_string())
    }
}
