//! Bayes-optimal observation times for stochastic process models.
//!
//! Designs are multisets of `k` times on a regular grid. Three searches are
//! provided over any [`UtilityModel`]: the particle search with a shrinking
//! threshold ([`optim::run_new_algorithm`]), a Metropolis chain over designs
//! ([`optim::run_muller`]) and a resampling-Markov population
//! ([`optim::run_amzal`]). Four benchmark models live in [`models`].

pub mod error;
pub mod grid;
pub mod model;
pub mod models;
pub mod ode;
pub mod optim;
pub mod particles;
pub mod quadrature;
mod rank_tree;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use grid::{canonicalize, location_to_design, DesignLocation, TimeGrid};
pub use model::{UtilityModel, UtilityScale};
pub use optim::{
    advance_new_algorithm, powering_correspondence, run_amzal, run_muller, run_new_algorithm,
    AmzalConfig, MullerConfig, NewAlgConfig, RunResult, StepSummary,
};
pub use particles::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointRecord, ParticleStats, ParticleSystem,
    TopDesign,
};
pub use rng::{RandomSource, SeedSequence, StreamKey, StreamRng};
