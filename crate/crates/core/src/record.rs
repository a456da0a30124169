//! Time series produced by a single trajectory.

use crate::Ensemble;

/// Control state at a sampled instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSample {
    /// `‖uᵢ‖` per agent.
    pub norms: Vec<f64>,
    /// Smallest index with a nonzero control, if any.
    pub active: Option<usize>,
    /// Whether the state lies in the flocking region at this instant.
    pub in_region: bool,
}

impl ControlSample {
    pub fn total(&self) -> f64 {
        self.norms.iter().sum()
    }

    pub fn active_count(&self) -> usize {
        self.norms.iter().filter(|n| **n > 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub spatial_variance: f64,
    pub velocity_variance: Option<f64>,
    /// Largest distance from an agent to the barycenter.
    pub max_radius: f64,
    pub edges: Option<usize>,
    pub clusters: Option<usize>,
    pub control: Option<ControlSample>,
}

impl Sample {
    pub fn bare(t: f64, spatial_variance: f64, max_radius: f64) -> Self {
        Self { t, spatial_variance, velocity_variance: None, max_radius, edges: None, clusters: None, control: None }
    }
}

/// Everything needed to audit a run: the seed, the sampled diagnostics and
/// the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// Hash of the configuration that produced the run, when one exists.
    pub config_hash: Option<String>,
    pub agents: usize,
    pub samples: Vec<Sample>,
    pub final_state: Ensemble,
    /// Time at which the early-exit equilibrium test fired.
    pub equilibrium_at: Option<f64>,
    /// Count of no-op events (isolated voters, clamped opinions, ...).
    pub skipped_events: usize,
}

impl RunRecord {
    pub fn new(seed: u64, agents: usize, final_state: Ensemble) -> Self {
        Self {
            seed,
            config_hash: None,
            agents,
            samples: Vec::new(),
            final_state,
            equilibrium_at: None,
            skipped_events: 0,
        }
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Times strictly increasing.
    pub fn is_time_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].t > w[0].t)
    }
}
