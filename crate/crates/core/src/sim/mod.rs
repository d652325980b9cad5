//! Scenario simulator: generation, virtual-time runs, traces, verification
//! against the offline oracle, and the live socket demo.

pub mod live;
mod run;
pub mod scenario;
mod sweep;
pub mod trace;
mod verify;

use thiserror::Error;

use crate::clock::ClockError;
use crate::fusion::FusionError;
use crate::model::ModelError;
use crate::transport::TransportError;

pub use run::{drive, run_scenario, run_simulation, FeedSpec, SimulationOutput};
pub use scenario::{generate_scenario, FlowSpec, GeneratedFlow, Scenario, ScenarioConfig};
pub use sweep::{sweep_alpha, sweep_csv, SweepRow};
pub use trace::{emit_trace, parse_trace, FlowUse, Trace, TraceRecord};
pub use verify::{verify, verify_scenario, VerifyReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("trace line {line}: {message}")]
    TraceSyntax { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Fusion(FusionError::Model(e))
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
