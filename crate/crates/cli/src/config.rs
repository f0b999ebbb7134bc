//! Experiment configuration (TOML).
//!
//! A config names one model and either one `[algorithm]` or a list of
//! labelled `[[algorithms]]`. Every unset value is filled from per-model
//! defaults by [`ExperimentConfig::resolve`]; the resolved form is again a
//! valid config, and it is what output documents embed.

use std::path::Path;

use obsdesign::models::{AphidSpec, DeathModelSpec, OscillatorySpec, ToySpec};
use obsdesign::optim::{AmzalConfig, MullerConfig, NewAlgConfig};
use obsdesign::TimeGrid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Death(DeathModelSpec),
    Oscillatory(OscillatorySpec),
    Toy(ToySpec),
    Aphid(AphidSpec),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Death(_) => "death",
            ModelConfig::Oscillatory(_) => "oscillatory",
            ModelConfig::Toy(_) => "toy",
            ModelConfig::Aphid(_) => "aphid",
        }
    }

    pub fn default_grid(&self) -> GridConfig {
        let (t_min, t_max, step, k) = match self {
            ModelConfig::Death(_) => (0.01, 10.0, 0.01, 1),
            ModelConfig::Oscillatory(_) => (0.0, 1.0, 0.002, 2),
            ModelConfig::Toy(spec) => (0.0, 15.0, 0.01, spec.mu.len()),
            ModelConfig::Aphid(_) => (1.0, 49.0, 1.0, 1),
        };
        GridConfig { t_min, t_max, step, k }
    }

    /// `(steps after initialization, evaluations per step, λ)`.
    fn default_schedule(&self) -> (usize, usize, f64) {
        match self {
            ModelConfig::Death(_) => (4, 4800, 4.0),
            ModelConfig::Oscillatory(_) => (9, 2400, 4.0),
            ModelConfig::Toy(_) => (14, 24_000, 1.0),
            ModelConfig::Aphid(_) => (8, 48_000, 4.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub k: usize,
}

impl GridConfig {
    pub fn build(&self) -> CliResult<TimeGrid> {
        TimeGrid::new(self.t_min, self.t_max, self.step, self.k)
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlgorithmConfig {
    New {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        steps: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        per_step: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budgets: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambdas: Option<Vec<f64>>,
    },
    Muller {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iterations: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicates: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init: Option<Vec<u32>>,
        #[serde(default)]
        exponentiate_log_utility: bool,
    },
    Amzal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        particles: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicates: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default)]
        exponentiate_log_utility: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledAlgorithm {
    pub label: String,
    #[serde(flatten)]
    pub algorithm: AlgorithmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    /// Weight refresh interval of the new algorithm; defaults to `workers`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    /// Rows written to the top-designs table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    /// Declared evaluation budget per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// Reference optimum for RMSE reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub algorithms: Vec<LabelledAlgorithm>,
}

/// An algorithm with every parameter fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedAlgorithm {
    New(NewAlgConfig),
    Muller(MullerConfig),
    Amzal(AmzalConfig),
}

impl ResolvedAlgorithm {
    pub fn kind(&self) -> &'static str {
        match self {
            ResolvedAlgorithm::New(_) => "new",
            ResolvedAlgorithm::Muller(_) => "muller",
            ResolvedAlgorithm::Amzal(_) => "amzal",
        }
    }

    pub fn to_config(&self) -> AlgorithmConfig {
        match self {
            ResolvedAlgorithm::New(c) => AlgorithmConfig::New {
                steps: None,
                per_step: None,
                lambda: None,
                budgets: Some(c.budgets.clone()),
                alphas: Some(c.alphas.clone()),
                lambdas: Some(c.lambdas.clone()),
            },
            ResolvedAlgorithm::Muller(c) => AlgorithmConfig::Muller {
                iterations: Some(c.iterations),
                replicates: Some(c.replicates),
                lambda: Some(c.lambda),
                init: c.init.clone(),
                exponentiate_log_utility: c.exponentiate_log_utility,
            },
            ResolvedAlgorithm::Amzal(c) => AlgorithmConfig::Amzal {
                particles: Some(c.particles),
                replicates: Some(c.replicates.clone()),
                lambda: Some(c.lambda),
                exponentiate_log_utility: c.exponentiate_log_utility,
            },
        }
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub workers: usize,
    pub repetitions: usize,
    pub batch: usize,
    pub top: usize,
    pub budget: Option<u64>,
    pub reference: Option<Vec<f64>>,
    pub model: ModelConfig,
    pub grid: TimeGrid,
    /// `(label, algorithm)`; a single `[algorithm]` is labelled by its kind.
    pub algorithms: Vec<(String, ResolvedAlgorithm)>,
    /// The resolved config, as written to output documents.
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills defaults and validates.
    pub fn resolve(&self) -> CliResult<Experiment> {
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(CliError::Config("workers: must be at least 1".into()));
        }
        let repetitions = self.repetitions.unwrap_or(1);
        if repetitions == 0 {
            return Err(CliError::Config("repetitions: must be at least 1".into()));
        }
        let batch = self.batch.unwrap_or(workers);
        if batch == 0 {
            return Err(CliError::Config("batch: must be at least 1".into()));
        }
        let top = self.top.unwrap_or(100);
        if top == 0 {
            return Err(CliError::Config("top: must be at least 1".into()));
        }
        crate::dispatch::build_model(&self.model)?;
        let grid_cfg = self.grid.unwrap_or_else(|| self.model.default_grid());
        let grid = grid_cfg.build()?;
        if let Some(r) = &self.reference {
            if r.len() != grid.k {
                return Err(CliError::Config(format!(
                    "reference: expected {} times, got {}",
                    grid.k,
                    r.len()
                )));
            }
        }

        let mut entries: Vec<(String, &AlgorithmConfig)> = Vec::new();
        match (&self.algorithm, self.algorithms.is_empty()) {
            (Some(_), false) => {
                return Err(CliError::Config(
                    "algorithm: give either [algorithm] or [[algorithms]], not both".into(),
                ))
            }
            (None, true) => return Err(CliError::Config("algorithm: missing".into())),
            (Some(a), true) => entries.push((kind_of(a).to_string(), a)),
            (None, false) => {
                for la in &self.algorithms {
                    if entries.iter().any(|(l, _)| *l == la.label) {
                        return Err(CliError::Config(format!("algorithms: duplicate label {:?}", la.label)));
                    }
                    entries.push((la.label.clone(), &la.algorithm));
                }
            }
        }
        let mut algorithms = Vec::new();
        for (label, a) in entries {
            let resolved = self.resolve_algorithm(a, batch)?;
            algorithms.push((label, resolved));
        }

        let mut config = self.clone();
        config.workers = Some(workers);
        config.repetitions = Some(repetitions);
        config.batch = Some(batch);
        config.top = Some(top);
        config.grid = Some(grid_cfg);
        if self.algorithm.is_some() {
            config.algorithm = Some(algorithms[0].1.to_config());
        } else {
            config.algorithms = algorithms
                .iter()
                .map(|(label, a)| LabelledAlgorithm {
                    label: label.clone(),
                    algorithm: a.to_config(),
                })
                .collect();
        }
        Ok(Experiment {
            seed: self.seed,
            workers,
            repetitions,
            batch,
            top,
            budget: self.budget,
            reference: self.reference.clone(),
            model: self.model.clone(),
            grid,
            algorithms,
            config,
        })
    }

    fn resolve_algorithm(&self, a: &AlgorithmConfig, batch: usize) -> CliResult<ResolvedAlgorithm> {
        let (d_steps, d_per_step, d_lambda) = self.model.default_schedule();
        let resolved = match a {
            AlgorithmConfig::New {
                steps,
                per_step,
                lambda,
                budgets,
                alphas,
                lambdas,
            } => {
                let cfg = match budgets {
                    Some(b) => {
                        if steps.is_some_and(|s| s + 1 != b.len()) {
                            return Err(CliError::Config(
                                "algorithm.steps: disagrees with the length of algorithm.budgets".into(),
                            ));
                        }
                        if per_step.is_some() {
                            return Err(CliError::Config(
                                "algorithm.per_step: not allowed together with algorithm.budgets".into(),
                            ));
                        }
                        let m = b.len().saturating_sub(1);
                        let mut c = NewAlgConfig::uniform(m, 1, lambda.unwrap_or(d_lambda));
                        c.budgets = b.clone();
                        c
                    }
                    None => {
                        let per_step = match (per_step, self.budget) {
                            (Some(n), _) => *n,
                            (None, Some(total)) => (total as usize) / (steps.unwrap_or(d_steps) + 1),
                            (None, None) => d_per_step,
                        };
                        NewAlgConfig::uniform(steps.unwrap_or(d_steps), per_step, lambda.unwrap_or(d_lambda))
                    }
                };
                let mut cfg = cfg.with_batch(batch);
                if let Some(a) = alphas {
                    cfg.alphas = a.clone();
                }
                if let Some(l) = lambdas {
                    cfg.lambdas = l.clone();
                }
                cfg.validate().map_err(|e| CliError::Config(format!("algorithm: {e}")))?;
                if let Some(total) = self.budget {
                    if cfg.total_budget() != total {
                        return Err(CliError::Config(format!(
                            "budget: declared {total} but algorithm.budgets sum to {}",
                            cfg.total_budget()
                        )));
                    }
                }
                ResolvedAlgorithm::New(cfg)
            }
            AlgorithmConfig::Muller {
                iterations,
                replicates,
                lambda,
                init,
                exponentiate_log_utility,
            } => {
                let j = replicates.unwrap_or(1);
                if j == 0 {
                    return Err(CliError::Config("algorithm.replicates: must be at least 1".into()));
                }
                let iterations = match iterations {
                    Some(n) => *n,
                    None => {
                        let total = self.budget.unwrap_or(((d_steps + 1) * d_per_step) as u64) as usize;
                        (total / j).saturating_sub(1)
                    }
                };
                let cfg = MullerConfig {
                    iterations,
                    replicates: j,
                    lambda: lambda.unwrap_or(d_lambda),
                    init: init.clone(),
                    exponentiate_log_utility: *exponentiate_log_utility,
                };
                cfg.validate().map_err(|e| CliError::Config(format!("algorithm: {e}")))?;
                ResolvedAlgorithm::Muller(cfg)
            }
            AlgorithmConfig::Amzal {
                particles,
                replicates,
                lambda,
                exponentiate_log_utility,
            } => {
                let cfg = AmzalConfig {
                    particles: particles.unwrap_or(2400),
                    replicates: replicates.clone().unwrap_or_else(|| vec![1, 2, 4]),
                    lambda: lambda.unwrap_or(d_lambda),
                    exponentiate_log_utility: *exponentiate_log_utility,
                };
                cfg.validate().map_err(|e| CliError::Config(format!("algorithm: {e}")))?;
                ResolvedAlgorithm::Amzal(cfg)
            }
        };
        crate::dispatch::check_compatible(&self.model, &resolved)?;
        Ok(resolved)
    }
}

fn kind_of(a: &AlgorithmConfig) -> &'static str {
    match a {
        AlgorithmConfig::New { .. } => "new",
        AlgorithmConfig::Muller { .. } => "muller",
        AlgorithmConfig::Amzal { .. } => "amzal",
    }
}
