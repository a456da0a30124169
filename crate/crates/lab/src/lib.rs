//! Seeded Monte Carlo experiments over the bounded-confidence, alignment
//! and control models of `swarmlab-core`, with CSV outputs and a CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;

use std::fmt;
use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, AggregateRow, ExperimentResult, RunSummary};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldProblem {
    pub key: String,
    pub message: String,
}

impl FieldProblem {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

/// Every problem found in a configuration, one per field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<FieldProblem>,
}

impl ConfigError {
    pub fn single(key: &str, message: impl Into<String>) -> Self {
        Self { problems: vec![FieldProblem::new(key, message)] }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for p in &self.problems {
            writeln!(f, "  {}: {}", p.key, p.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] swarmlab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run {run} of sweep point {point} broke an invariant: {what}")]
    Invariant { point: usize, run: usize, what: String },
}

impl LabError {
    /// 1 for configuration problems, 2 for everything that fails later.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 1,
            _ => 2,
        }
    }
}
