//! Metropolis chain over designs whose stationary marginal is proportional
//! to the `J`-th power of the expected utility.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::result::{RunResult, StepSummary};
use super::{check_scale, evaluate, log_factor, phase};
use crate::error::{Error, Result};
use crate::grid::{DesignLocation, TimeGrid};
use crate::model::UtilityModel;
use crate::particles::{ParticleSystem, TopDesign};
use crate::rng::{RandomSource, StreamKey, StreamRng};
use crate::samplers::{log_proposal_ratio, uniform_location, PerturbKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MullerConfig {
    /// Number of proposals `N`.
    pub iterations: usize,
    /// Replicates `J` per design.
    pub replicates: usize,
    /// Random-walk proposal mean `λ`.
    pub lambda: f64,
    /// Starting grid indices; uniform over the grid when absent.
    #[serde(default)]
    pub init: Option<Vec<u32>>,
    /// Treat log-scale utilities as `log u`.
    #[serde(default)]
    pub exponentiate_log_utility: bool,
}

impl MullerConfig {
    pub fn new(iterations: usize, replicates: usize, lambda: f64) -> Self {
        MullerConfig {
            iterations,
            replicates,
            lambda,
            init: None,
            exponentiate_log_utility: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.replicates == 0 {
            return Err(Error::Config("muller: iterations and replicates must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("muller: lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// `J` evaluations at `loc`; returns the raw utilities and `Σ log u`.
fn replicate<M: UtilityModel>(
    model: &M,
    grid: &TimeGrid,
    loc: &DesignLocation,
    j: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, f64)> {
    let mut us = Vec::with_capacity(j);
    let mut log_total = 0.0;
    for _ in 0..j {
        let u = evaluate(model, grid, loc, rng)?;
        log_total += log_factor(model, u)?;
        us.push(u);
    }
    Ok((us, log_total))
}

pub fn run_muller<M: UtilityModel>(
    model: &M,
    grid: TimeGrid,
    cfg: &MullerConfig,
    seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    grid.validate()?;
    check_scale(model, cfg.exponentiate_log_utility)?;
    let points = grid.points();
    let kernel = PerturbKernel::new(cfg.lambda, points, grid.k)?;
    let mut system = ParticleSystem::new(grid);
    let stream = |i: usize| RandomSource::new(seed, StreamKey::new(0, phase::MULLER, i).id()).rng();

    let mut rng = stream(0);
    let mut current = match &cfg.init {
        Some(idx) => grid.location(idx.clone())?,
        None => uniform_location(points, grid.k, &mut rng),
    };
    let (us, mut log_current) = replicate(model, &grid, &current, cfg.replicates, &mut rng)?;
    for u in us {
        system.update_stats(&current, u)?;
    }
    let mut visits: BTreeMap<DesignLocation, u64> = BTreeMap::new();
    *visits.entry(current.clone()).or_default() += 1;

    let mut accepted = 0u64;
    for i in 1..=cfg.iterations {
        let mut rng = stream(i);
        // off-grid proposals are rejected outright
        if let Some(proposal) = kernel.propose(&current, &mut rng) {
            let (us, log_proposal) = replicate(model, &grid, &proposal, cfg.replicates, &mut rng)?;
            for u in us {
                system.update_stats(&proposal, u)?;
            }
            let log_ratio = log_proposal - log_current + log_proposal_ratio(&current, &proposal);
            if rng.random::<f64>().ln() < log_ratio {
                current = proposal;
                log_current = log_proposal;
                accepted += 1;
            }
        }
        *visits.entry(current.clone()).or_default() += 1;
    }

    let best = modal(&visits, &system)?;
    let steps = vec![StepSummary::capture(1, None, cfg.lambda, &system)];
    Ok(RunResult {
        algorithm: "muller".into(),
        best,
        total_evaluations: system.total_evaluations(),
        failures: 0,
        steps,
        warnings: Vec::new(),
        complete: true,
        acceptance_rate: Some(accepted as f64 / cfg.iterations as f64),
        system,
    })
}

/// Most frequent location; ties go to the higher running mean, then to the
/// smaller location.
pub(crate) fn modal(counts: &BTreeMap<DesignLocation, u64>, system: &ParticleSystem) -> Result<TopDesign> {
    let mut best: Option<(&DesignLocation, u64, f64)> = None;
    for (loc, &c) in counts {
        let mean = system.stats(loc).map_or(f64::NEG_INFINITY, |s| s.mean);
        let better = match best {
            None => true,
            Some((_, bc, bm)) => c > bc || (c == bc && mean > bm),
        };
        if better {
            best = Some((loc, c, mean));
        }
    }
    let (loc, _, _) = best.ok_or_else(|| Error::State("empty chain".into()))?;
    system
        .summary(loc)
        .ok_or_else(|| Error::State(format!("modal location {loc} was never evaluated")))
}
