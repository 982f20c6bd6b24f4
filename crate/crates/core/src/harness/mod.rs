//! Scenario configuration, seeded benchmark runs, metrics and result files.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

use thiserror::Error;

pub use config::{load_config, parse_config, AgentKind, ConfigError, EnvironmentSpec, ScenarioConfig, TaViSource};
pub use output::{emit_results, emit_summary, OutputFormat};
pub use presets::{bench_suite, preset, PRESET_NAMES};
pub use runner::{
    aggregate, run_agent, run_benchmark, run_episode, run_suite, AgentAggregate, BenchmarkReport, MeanStd, RunResult,
    RunTotals, StepRecord,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("TVPOMDP_THREADS must be a positive integer, got {0:?}")]
    Threads(String),
    #[error(transparent)]
    Estimator(#[from] crate::estimator::EstimatorError),
    #[error(transparent)]
    Memory(#[from] crate::memory::MemoryError),
    #[error(transparent)]
    Belief(#[from] crate::belief::BeliefError),
    #[error("cannot write {path}: {source}")]
    Write { path: std::path::PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// True for problems with the user's input rather than with execution.
    pub fn is_validation(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::Threads(_))
    }
}
