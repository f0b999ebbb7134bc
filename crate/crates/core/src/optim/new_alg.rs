//! Particle search over grid designs with a shrinking threshold.
//!
//! Step 0 scores uniformly drawn designs. Each later step `m` repeatedly
//! draws a design in proportion to its shifted running mean among the top
//! `α_m` fraction of visited designs, moves it by a Skellam random walk,
//! and scores the result. All evaluations feed the same running means.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::result::{RunResult, StepSummary};
use super::{evaluate, phase};
use crate::error::{Error, Result};
use crate::grid::{DesignLocation, TimeGrid};
use crate::model::UtilityModel;
use crate::particles::ParticleSystem;
use crate::rng::{RandomSource, StreamKey};
use crate::samplers::{uniform_location, PerturbKernel};

/// Initialization work is handed out in chunks of this many iterations.
const INIT_CHUNK: usize = 1024;

/// Largest tolerated share of failed iterations.
const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewAlgConfig {
    /// `N_0, …, N_M`; `N_0` is the initialization.
    pub budgets: Vec<usize>,
    /// `α_1, …, α_M`.
    pub alphas: Vec<f64>,
    /// `λ_1, …, λ_M`.
    pub lambdas: Vec<f64>,
    /// Weight refresh interval `B`.
    pub batch: usize,
}

impl NewAlgConfig {
    /// `steps` steps after initialization, `per_step` evaluations in each,
    /// `α_m = 2^-m`, and `lambda` in every step but the last.
    pub fn uniform(steps: usize, per_step: usize, lambda: f64) -> Self {
        NewAlgConfig {
            budgets: vec![per_step; steps + 1],
            alphas: halving(1, steps),
            lambdas: (1..=steps).map(|m| if m == steps { 0.0 } else { lambda }).collect(),
            batch: 1,
        }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    /// Number of steps `M` after initialization.
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn total_budget(&self) -> u64 {
        self.budgets.iter().map(|&n| n as u64).sum()
    }

    /// Appends `extra` steps of `per_step` evaluations, continuing the
    /// halving thresholds with no perturbation.
    pub fn extended(&self, extra: usize, per_step: usize) -> Self {
        let mut cfg = self.clone();
        let last = self.alphas.last().copied().unwrap_or(1.0);
        for i in 1..=extra {
            cfg.budgets.push(per_step);
            cfg.alphas.push(last * 0.5f64.powi(i as i32));
            cfg.lambdas.push(0.0);
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.alphas.len();
        if self.budgets.len() != m + 1 || self.lambdas.len() != m {
            return Err(Error::Config(format!(
                "new algorithm: need {} budgets and {m} perturbation means for {m} thresholds, got {} and {}",
                m + 1,
                self.budgets.len(),
                self.lambdas.len()
            )));
        }
        if self.budgets.iter().any(|&n| n == 0) {
            return Err(Error::Config("new algorithm: budgets must be positive".into()));
        }
        if self.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::Config("new algorithm: thresholds must lie in (0, 1]".into()));
        }
        if self.alphas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config("new algorithm: thresholds must not increase".into()));
        }
        if self.lambdas.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("new algorithm: perturbation means must be >= 0".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("new algorithm: batch must be at least 1".into()));
        }
        Ok(())
    }
}

fn halving(from: usize, to: usize) -> Vec<f64> {
    (from..=to).map(|m| 0.5f64.powi(m as i32)).collect()
}

/// Runs the full schedule from scratch.
pub fn run_new_algorithm<M: UtilityModel>(
    model: &M,
    grid: TimeGrid,
    cfg: &NewAlgConfig,
    seed: u64,
) -> Result<RunResult> {
    grid.validate()?;
    advance_new_algorithm(model, ParticleSystem::new(grid), cfg, seed, None)
}

/// Continues the schedule from the system's recorded position, stopping
/// after at most `limit` iterations. Stopping and resuming on a multiple of
/// the batch size gives the same result as an uninterrupted run.
pub fn advance_new_algorithm<M: UtilityModel>(
    model: &M,
    mut system: ParticleSystem,
    cfg: &NewAlgConfig,
    seed: u64,
    limit: Option<u64>,
) -> Result<RunResult> {
    cfg.validate()?;
    let grid = *system.grid();
    let points = grid.points();
    let steps_total = cfg.steps();
    let mut remaining = limit.unwrap_or(u64::MAX);
    let mut steps = Vec::new();
    let mut failures = 0u64;
    let mut attempted = 0u64;
    let mut last_error = None;

    while system.step_index <= steps_total {
        let m = system.step_index;
        let n_m = cfg.budgets[m];
        let alpha = (m > 0).then(|| cfg.alphas[m - 1]);
        let lambda = if m > 0 { cfg.lambdas[m - 1] } else { 0.0 };

        if system.next_iteration >= n_m {
            steps.push(StepSummary::capture(m, alpha, lambda, &system));
            system.step_index += 1;
            system.next_iteration = 0;
            continue;
        }
        if remaining == 0 {
            break;
        }

        let start = system.next_iteration;
        let batch = if m == 0 { INIT_CHUNK.max(cfg.batch) } else { cfg.batch };
        let end = n_m
            .min((start / batch + 1) * batch)
            .min(start.saturating_add(remaining.min(usize::MAX as u64) as usize));

        let results: Vec<(DesignLocation, Result<f64>)> = if m == 0 {
            let k = grid.k;
            map_iterations(start, end, |i| {
                let mut rng = RandomSource::new(seed, StreamKey::new(0, phase::INIT, i).id()).rng();
                let loc = uniform_location(points, k, &mut rng);
                let u = evaluate(model, &grid, &loc, &mut rng);
                (loc, u)
            })
        } else {
            system.refresh_weights(alpha.expect("step > 0"))?;
            let view = system
                .active_view()
                .ok_or_else(|| Error::State("no active designs to sample from".into()))?;
            let kernel = PerturbKernel::new(lambda, points, grid.k)?;
            let system = &system;
            map_iterations(start, end, |i| {
                let mut rng = RandomSource::new(seed, StreamKey::new(m, phase::NEW, i).id()).rng();
                let chosen = system.sample_active(&view, &mut rng);
                let loc = kernel.perturb(&chosen, &mut rng);
                let u = evaluate(model, &grid, &loc, &mut rng);
                (loc, u)
            })
        };

        for (loc, u) in results {
            attempted += 1;
            match u {
                Ok(u) if u.is_finite() => system.update_stats(&loc, u)?,
                Ok(u) => {
                    failures += 1;
                    last_error = Some(format!("non-finite utility {u} at {loc}"));
                }
                Err(e) => {
                    failures += 1;
                    log::debug!("evaluation at {loc} failed: {e}");
                    last_error = Some(e.to_string());
                }
            }
        }
        if failures as f64 > MAX_FAILURE_RATE * attempted as f64 && attempted >= 100 {
            return Err(Error::Numeric(format!(
                "{failures} of {attempted} evaluations failed; last error: {}",
                last_error.unwrap_or_default()
            )));
        }
        remaining -= (end - start) as u64;
        system.next_iteration = end;
    }

    let best = system
        .best()
        .ok_or_else(|| Error::State("no design was evaluated".into()))?;
    let mut warnings = Vec::new();
    if failures > 0 {
        warnings.push(format!("{failures} evaluations failed"));
    }
    Ok(RunResult {
        algorithm: "new".into(),
        best,
        total_evaluations: system.total_evaluations(),
        failures,
        steps,
        warnings,
        complete: system.step_index > steps_total,
        acceptance_rate: None,
        system,
    })
}

fn map_iterations<T, F>(start: usize, end: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if end - start == 1 {
        vec![f(start)]
    } else {
        (start..end).into_par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UtilityModel;
    use crate::rng::StreamRng;
    use rand::Rng;

    struct Flat;

    impl UtilityModel for Flat {
        type Data = ();
        fn name(&self) -> &str {
            "flat"
        }
        fn simulate(&self, _: &[f64], _: &mut StreamRng) -> Result<()> {
            Ok(())
        }
        fn utility(&self, _: &[f64], _: &(), _: &mut StreamRng) -> Result<f64> {
            Ok(1.0)
        }
    }

    /// Noisy parabola peaking at t = 0.3.
    struct Parabola;

    impl UtilityModel for Parabola {
        type Data = f64;
        fn name(&self) -> &str {
            "parabola"
        }
        fn simulate(&self, _: &[f64], rng: &mut StreamRng) -> Result<f64> {
            Ok(rng.random::<f64>() - 0.5)
        }
        fn utility(&self, d: &[f64], noise: &f64, _: &mut StreamRng) -> Result<f64> {
            Ok(-d.iter().map(|t| (t - 0.3).powi(2)).sum::<f64>() + 0.01 * noise)
        }
    }

    struct Flaky(u64);

    impl UtilityModel for Flaky {
        type Data = ();
        fn name(&self) -> &str {
            "flaky"
        }
        fn simulate(&self, _: &[f64], rng: &mut StreamRng) -> Result<()> {
            if rng.random_range(0..self.0) == 0 {
                Err(Error::Numeric("boom".into()))
            } else {
                Ok(())
            }
        }
        fn utility(&self, _: &[f64], _: &(), _: &mut StreamRng) -> Result<f64> {
            Ok(1.0)
        }
    }

    fn grid(k: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, 0.01, k).unwrap()
    }

    #[test]
    fn evaluation_count_matches_budget() {
        let cfg = NewAlgConfig {
            budgets: vec![300, 200, 100, 50],
            alphas: vec![0.5, 0.25, 0.125],
            lambdas: vec![4.0, 4.0, 0.0],
            batch: 1,
        };
        let res = run_new_algorithm(&Parabola, grid(2), &cfg, 1).unwrap();
        assert_eq!(res.total_evaluations, 650);
        assert_eq!(res.steps.len(), 4);
        assert!(res.complete);
    }

    #[test]
    fn finds_parabola_peak() {
        let cfg = NewAlgConfig::uniform(5, 1000, 4.0);
        let res = run_new_algorithm(&Parabola, grid(1), &cfg, 2).unwrap();
        assert!((res.best.design[0] - 0.3).abs() <= 0.02, "{:?}", res.best.design);
    }

    #[test]
    fn flat_utility_visits_evenly() {
        // ten designs, everything retained, no movement
        let g = TimeGrid::new(0.0, 9.0, 1.0, 1).unwrap();
        let cfg = NewAlgConfig {
            budgets: vec![1000, 100_000],
            alphas: vec![1.0],
            lambdas: vec![0.0],
            batch: 1,
        };
        let res = run_new_algorithm(&Flat, g, &cfg, 3).unwrap();
        let counts: Vec<f64> = res.system.iter().map(|(_, s)| s.n as f64).collect();
        assert_eq!(counts.len(), 10);
        let total: f64 = counts.iter().sum();
        let expect = total / 10.0;
        let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // 99th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 21.666, "chi2 = {chi2}");
    }

    #[test]
    fn flat_utility_retains_everything_at_full_threshold() {
        let cfg = NewAlgConfig {
            budgets: vec![50, 50],
            alphas: vec![1.0],
            lambdas: vec![2.0],
            batch: 1,
        };
        let res = run_new_algorithm(&Flat, grid(1), &cfg, 4).unwrap();
        let mut sys = res.system;
        sys.refresh_weights(1.0).unwrap();
        assert_eq!(sys.active_weights().len(), sys.visited());
    }

    #[test]
    fn seeds_reproduce() {
        let cfg = NewAlgConfig::uniform(3, 200, 4.0).with_batch(8);
        let a = run_new_algorithm(&Parabola, grid(2), &cfg, 9).unwrap();
        let b = run_new_algorithm(&Parabola, grid(2), &cfg, 9).unwrap();
        assert_eq!(a.system.to_checkpoint(), b.system.to_checkpoint());
        let c = run_new_algorithm(&Parabola, grid(2), &cfg, 10).unwrap();
        assert_ne!(a.system.to_checkpoint(), c.system.to_checkpoint());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = NewAlgConfig::uniform(3, 500, 4.0).with_batch(8);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_new_algorithm(&Parabola, grid(2), &cfg, 5).unwrap())
        };
        assert_eq!(run(1).system.to_checkpoint(), run(8).system.to_checkpoint());
    }

    #[test]
    fn split_run_matches_whole() {
        for batch in [1, 4] {
            let cfg = NewAlgConfig::uniform(3, 300, 4.0).with_batch(batch);
            let whole = run_new_algorithm(&Parabola, grid(2), &cfg, 6).unwrap();
            let first = advance_new_algorithm(&Parabola, ParticleSystem::new(grid(2)), &cfg, 6, Some(600)).unwrap();
            assert!(!first.complete);
            let text = crate::particles::save_checkpoint(&first.system);
            let restored = crate::particles::load_checkpoint(&text).unwrap();
            let rest = advance_new_algorithm(&Parabola, restored, &cfg, 6, None).unwrap();
            assert!(rest.complete);
            assert_eq!(whole.system.to_checkpoint(), rest.system.to_checkpoint());
            assert_eq!(whole.best, rest.best);
        }
    }

    #[test]
    fn rare_failures_are_counted() {
        let cfg = NewAlgConfig::uniform(2, 2000, 4.0);
        let res = run_new_algorithm(&Flaky(1000), grid(1), &cfg, 7).unwrap();
        assert!(res.failures > 0);
        assert_eq!(res.total_evaluations + res.failures, 6000);
    }

    #[test]
    fn frequent_failures_abort() {
        let cfg = NewAlgConfig::uniform(2, 2000, 4.0);
        assert!(matches!(
            run_new_algorithm(&Flaky(10), grid(1), &cfg, 8),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn config_validation() {
        let good = NewAlgConfig::uniform(3, 10, 4.0);
        assert!(good.validate().is_ok());
        assert_eq!(good.alphas, vec![0.5, 0.25, 0.125]);
        assert_eq!(good.lambdas, vec![4.0, 4.0, 0.0]);
        let mut bad = good.clone();
        bad.alphas = vec![0.25, 0.5, 0.125];
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.budgets.pop();
        assert!(bad.validate().is_err());
        assert!(good.clone().with_batch(0).validate().is_err());
        let ext = good.extended(2, 7);
        assert_eq!(ext.alphas, vec![0.5, 0.25, 0.125, 0.0625, 0.03125]);
        assert_eq!(ext.budgets, vec![10, 10, 10, 10, 7, 7]);
        assert!(ext.validate().is_ok());
    }
}
