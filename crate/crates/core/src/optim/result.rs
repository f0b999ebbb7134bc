use serde::Serialize;

use crate::particles::{ParticleSystem, TopDesign};

/// Number of leading designs kept in each per-step snapshot.
pub const SNAPSHOT_SIZE: usize = 10;

/// State of the search at the end of one step.
#[derive(Debug, Clone, Serialize)]
pub struct StepSummary {
    /// Step number; 0 is the initialization.
    pub step: usize,
    pub alpha: Option<f64>,
    pub lambda: f64,
    /// Evaluations recorded so far (cumulative).
    pub evaluations: u64,
    pub visited: usize,
    pub top: Vec<TopDesign>,
}

impl StepSummary {
    pub(crate) fn capture(step: usize, alpha: Option<f64>, lambda: f64, system: &ParticleSystem) -> Self {
        StepSummary {
            step,
            alpha,
            lambda,
            evaluations: system.total_evaluations(),
            visited: system.visited(),
            top: system.top_designs(SNAPSHOT_SIZE),
        }
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub algorithm: String,
    /// Returned design, with its running statistics.
    pub best: TopDesign,
    pub total_evaluations: u64,
    /// Iterations abandoned because simulation or scoring failed.
    pub failures: u64,
    pub steps: Vec<StepSummary>,
    pub warnings: Vec<String>,
    /// Whether the configured schedule ran to the end.
    pub complete: bool,
    /// Metropolis acceptance rate, for the chain-based baselines.
    pub acceptance_rate: Option<f64>,
    /// Every evaluation, keyed by location.
    pub system: ParticleSystem,
}

impl RunResult {
    pub fn top_designs(&self, count: usize) -> Vec<TopDesign> {
        self.system.top_designs(count)
    }
}
