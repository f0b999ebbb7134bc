//! Builds models from config and runs algorithms over them.

use obsdesign::models::{AphidModel, DeathModel, OscillatoryModel, ToyModel};
use obsdesign::optim::{advance_new_algorithm, run_amzal, run_muller, run_new_algorithm, RunResult};
use obsdesign::{ParticleSystem, TimeGrid, UtilityModel, UtilityScale};

use crate::config::{ModelConfig, ResolvedAlgorithm};
use crate::error::{CliError, CliResult};

pub enum BuiltModel {
    Death(DeathModel),
    Oscillatory(OscillatoryModel),
    Toy(ToyModel),
    Aphid(AphidModel),
}

/// Something to do with a concrete model type.
pub trait ModelVisitor {
    type Output;
    fn visit<M: UtilityModel>(self, model: &M) -> Self::Output;
}

impl BuiltModel {
    pub fn accept<V: ModelVisitor>(&self, visitor: V) -> V::Output {
        match self {
            BuiltModel::Death(m) => visitor.visit(m),
            BuiltModel::Oscillatory(m) => visitor.visit(m),
            BuiltModel::Toy(m) => visitor.visit(m),
            BuiltModel::Aphid(m) => visitor.visit(m),
        }
    }
}

pub fn build_model(cfg: &ModelConfig) -> CliResult<BuiltModel> {
    let built = match cfg {
        ModelConfig::Death(s) => DeathModel::new(*s).map(BuiltModel::Death),
        ModelConfig::Oscillatory(s) => OscillatoryModel::new(*s).map(BuiltModel::Oscillatory),
        ModelConfig::Toy(s) => ToyModel::new(s.clone()).map(BuiltModel::Toy),
        ModelConfig::Aphid(s) => AphidModel::new(*s).map(BuiltModel::Aphid),
    };
    built.map_err(|e| CliError::Config(format!("model: {e}")))
}

fn scale(cfg: &ModelConfig) -> UtilityScale {
    match cfg {
        ModelConfig::Oscillatory(_) => UtilityScale::Log,
        _ => UtilityScale::Positive,
    }
}

/// Rejects algorithm/model pairs that cannot run as configured.
pub fn check_compatible(model: &ModelConfig, alg: &ResolvedAlgorithm) -> CliResult<()> {
    let exponentiate = match alg {
        ResolvedAlgorithm::New(_) => return Ok(()),
        ResolvedAlgorithm::Muller(c) => c.exponentiate_log_utility,
        ResolvedAlgorithm::Amzal(c) => c.exponentiate_log_utility,
    };
    if scale(model) == UtilityScale::Log && !exponentiate {
        return Err(CliError::Config(format!(
            "algorithm.exponentiate_log_utility: the {} model returns log-utilities, which the {} \
             algorithm can only use as a product target when exponentiated; set it to true",
            model.name(),
            alg.kind()
        )));
    }
    Ok(())
}

pub struct RunAlgorithm<'a> {
    pub grid: TimeGrid,
    pub algorithm: &'a ResolvedAlgorithm,
    pub seed: u64,
    /// Stop the new algorithm after this many iterations.
    pub limit: Option<u64>,
}

impl ModelVisitor for RunAlgorithm<'_> {
    type Output = obsdesign::Result<RunResult>;

    fn visit<M: UtilityModel>(self, model: &M) -> Self::Output {
        match self.algorithm {
            ResolvedAlgorithm::New(cfg) => match self.limit {
                None => run_new_algorithm(model, self.grid, cfg, self.seed),
                Some(_) => advance_new_algorithm(model, ParticleSystem::new(self.grid), cfg, self.seed, self.limit),
            },
            ResolvedAlgorithm::Muller(cfg) => run_muller(model, self.grid, cfg, self.seed),
            ResolvedAlgorithm::Amzal(cfg) => run_amzal(model, self.grid, cfg, self.seed),
        }
    }
}

pub struct Resume<'a> {
    pub system: ParticleSystem,
    pub config: &'a obsdesign::NewAlgConfig,
    pub seed: u64,
}

impl ModelVisitor for Resume<'_> {
    type Output = obsdesign::Result<RunResult>;

    fn visit<M: UtilityModel>(self, model: &M) -> Self::Output {
        advance_new_algorithm(model, self.system, self.config, self.seed, None)
    }
}
