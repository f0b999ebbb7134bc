//! Benchmark design problems.

pub mod aphid;
pub mod death;
pub mod oscillatory;
pub mod toy;

pub use aphid::{AphidModel, AphidSpec};
pub use death::{DeathModel, DeathModelSpec};
pub use oscillatory::{OscillatoryModel, OscillatorySpec};
pub use toy::{ToyModel, ToySpec};
