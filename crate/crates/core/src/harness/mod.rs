//! Scenario runner and CLI plumbing.

pub mod cli;
mod report;
mod runner;
mod scenario;

pub use report::{check_expectations, BeliefSnapshot, EventRecord, Report};
pub use runner::{
    compile_model, replay_alerts, replay_events, run_scenario, scenario_events, CompiledModel,
    BROWSER_USER_AGENT,
};
pub use scenario::{load_scenario, Expectations, Scenario, Variation, ZeusScenarioConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read `{path}`: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Topology(#[from] crate::netmodel::TopologyError),
    #[error(transparent)]
    Signatures(#[from] crate::alerts::SignatureError),
    #[error(transparent)]
    Datalog(#[from] crate::datalog::ParseError),
    #[error(transparent)]
    Bag(#[from] crate::bag::BagError),
    #[error(transparent)]
    Emulator(#[from] crate::emulators::EmulatorError),
    #[error("alert log: {0}")]
    AlertLog(#[from] serde_json::Error),
}
