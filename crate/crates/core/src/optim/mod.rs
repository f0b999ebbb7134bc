//! Design-search algorithms.

mod amzal;
mod muller;
mod new_alg;
mod powering;
mod result;

pub use amzal::{run_amzal, AmzalConfig};
pub use muller::{run_muller, MullerConfig};
pub use new_alg::{advance_new_algorithm, run_new_algorithm, NewAlgConfig};
pub use powering::powering_correspondence;
pub use result::{RunResult, StepSummary, SNAPSHOT_SIZE};

use crate::error::{Error, Result};
use crate::grid::{DesignLocation, TimeGrid};
use crate::model::{UtilityModel, UtilityScale};
use crate::rng::StreamRng;

/// Stream phases, so different kinds of work never share a stream.
pub(crate) mod phase {
    pub const NEW: u8 = 0;
    pub const MULLER: u8 = 1;
    pub const AMZAL_WEIGHT: u8 = 2;
    pub const AMZAL_MOVE: u8 = 3;
    pub const AMZAL_RESAMPLE: u8 = 4;
    pub const INIT: u8 = 5;
}

pub(crate) fn evaluate<M: UtilityModel>(
    model: &M,
    grid: &TimeGrid,
    loc: &DesignLocation,
    rng: &mut StreamRng,
) -> Result<f64> {
    model.sample_utility(&grid.design(loc), rng)
}

/// `log u` for the product targets of the MCMC-style baselines.
pub(crate) fn log_factor<M: UtilityModel>(model: &M, u: f64) -> Result<f64> {
    match model.scale() {
        UtilityScale::Log => Ok(u),
        UtilityScale::Positive if u > 0.0 => Ok(u.ln()),
        UtilityScale::Positive => Err(Error::Domain(format!(
            "product target needs positive utilities, got {u}; shift the utility \
             or supply a log-utility to be exponentiated"
        ))),
    }
}

/// Rejects log-scale models unless their utilities are to be exponentiated.
pub(crate) fn check_scale<M: UtilityModel>(model: &M, exponentiate: bool) -> Result<()> {
    if model.scale() == UtilityScale::Log && !exponentiate {
        return Err(Error::Config(format!(
            "model {} returns log-utilities; enable exponentiation to use a product target",
            model.name()
        )));
    }
    Ok(())
}
