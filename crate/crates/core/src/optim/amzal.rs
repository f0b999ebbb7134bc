//! Resampling-Markov search: a particle population whose weights are
//! products of an increasing number `J_m` of utility replicates.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::muller::modal;
use super::result::{RunResult, StepSummary};
use super::{check_scale, evaluate, log_factor, phase};
use crate::error::{Error, Result};
use crate::grid::{DesignLocation, TimeGrid};
use crate::model::UtilityModel;
use crate::particles::ParticleSystem;
use crate::rng::{RandomSource, StreamKey, StreamRng};
use crate::samplers::{log_proposal_ratio, multinomial_resample, uniform_location, PerturbKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmzalConfig {
    /// Population size `N`.
    pub particles: usize,
    /// `J_1 < J_2 < … < J_M`.
    pub replicates: Vec<usize>,
    /// Random-walk mean of the Metropolis move.
    pub lambda: f64,
    #[serde(default)]
    pub exponentiate_log_utility: bool,
}

impl AmzalConfig {
    pub fn new(particles: usize, replicates: Vec<usize>, lambda: f64) -> Self {
        AmzalConfig {
            particles,
            replicates,
            lambda,
            exponentiate_log_utility: false,
        }
    }

    /// Utility evaluations used by a full run:
    /// `N (J_M + Σ_m J_m)`, before off-grid proposals are skipped.
    pub fn nominal_evaluations(&self) -> u64 {
        let sum: usize = self.replicates.iter().sum();
        let last = self.replicates.last().copied().unwrap_or(0);
        (self.particles * (sum + last)) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("amzal: particles must be at least 1".into()));
        }
        if self.replicates.is_empty() || self.replicates[0] == 0 {
            return Err(Error::Config("amzal: replicate schedule must start at 1 or more".into()));
        }
        if self.replicates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("amzal: replicate schedule must be strictly increasing".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("amzal: lambda must be >= 0".into()));
        }
        Ok(())
    }
}

fn replicates<M: UtilityModel>(
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

struct Move {
    proposal: Option<DesignLocation>,
    utilities: Vec<f64>,
    log_product: f64,
    accept: bool,
}

pub fn run_amzal<M: UtilityModel>(
    model: &M,
    grid: TimeGrid,
    cfg: &AmzalConfig,
    seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    grid.validate()?;
    check_scale(model, cfg.exponentiate_log_utility)?;
    let n = cfg.particles;
    let points = grid.points();
    let kernel = PerturbKernel::new(cfg.lambda, points, grid.k)?;
    let stream = |step: usize, ph: u8, i: usize| RandomSource::new(seed, StreamKey::new(step, ph, i).id()).rng();
    let mut system = ParticleSystem::new(grid);
    let mut warnings = Vec::new();

    let mut locs: Vec<DesignLocation> = (0..n)
        .map(|i| uniform_location(points, grid.k, &mut stream(0, phase::INIT, i)))
        .collect();
    // log of the product of the J_{m-1} utilities behind each particle
    let mut log_u_hat = vec![0.0; n];
    let mut steps = Vec::new();
    let mut moves = 0u64;
    let mut accepted = 0u64;
    let mut prev_j = 0;

    for (m, &j) in cfg.replicates.iter().enumerate() {
        let step = m + 1;

        // weight by the fresh replicates
        let fresh: Vec<Result<(Vec<f64>, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| replicates(model, &grid, &locs[i], j - prev_j, &mut stream(step, phase::AMZAL_WEIGHT, i)))
            .collect();
        let mut log_w = Vec::with_capacity(n);
        for (i, r) in fresh.into_iter().enumerate() {
            let (us, lw) = r?;
            for u in us {
                system.update_stats(&locs[i], u)?;
            }
            log_w.push(lw);
        }

        // multinomial resampling; weights restart at one afterwards
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let ess = w.iter().sum::<f64>().powi(2) / w.iter().map(|x| x * x).sum::<f64>();
        if ess < 2.0 {
            let msg = format!("step {step}: effective sample size {ess:.3} below 2");
            log::warn!("amzal {msg}");
            warnings.push(msg);
        }
        let picks = multinomial_resample(&w, n, &mut stream(step, phase::AMZAL_RESAMPLE, 0))?;
        locs = picks.iter().map(|&p| locs[p].clone()).collect();
        log_u_hat = picks.iter().map(|&p| log_u_hat[p] + log_w[p]).collect();

        // one Metropolis move per particle with J_m replicates
        let results: Vec<Result<Move>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(step, phase::AMZAL_MOVE, i);
                let Some(proposal) = kernel.propose(&locs[i], &mut rng) else {
                    return Ok(Move {
                        proposal: None,
                        utilities: Vec::new(),
                        log_product: 0.0,
                        accept: false,
                    });
                };
                let (utilities, log_product) = replicates(model, &grid, &proposal, j, &mut rng)?;
                let log_ratio = log_product - log_u_hat[i] + log_proposal_ratio(&locs[i], &proposal);
                let accept = rng.random::<f64>().ln() < log_ratio;
                Ok(Move {
                    proposal: Some(proposal),
                    utilities,
                    log_product,
                    accept,
                })
            })
            .collect();
        for (i, r) in results.into_iter().enumerate() {
            let mv = r?;
            moves += 1;
            if let Some(p) = mv.proposal {
                for u in mv.utilities {
                    system.update_stats(&p, u)?;
                }
                if mv.accept {
                    locs[i] = p;
                    log_u_hat[i] = mv.log_product;
                    accepted += 1;
                }
            }
        }
        prev_j = j;
        steps.push(StepSummary::capture(step, None, cfg.lambda, &system));
    }

    let mut counts: BTreeMap<DesignLocation, u64> = BTreeMap::new();
    for loc in &locs {
        *counts.entry(loc.clone()).or_default() += 1;
    }
    let best = modal(&counts, &system)?;
    Ok(RunResult {
        algorithm: "amzal".into(),
        best,
        total_evaluations: system.total_evaluations(),
        failures: 0,
        steps,
        warnings,
        complete: true,
        acceptance_rate: Some(accepted as f64 / moves as f64),
        system,
    })
}
