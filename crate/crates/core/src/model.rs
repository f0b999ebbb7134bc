use crate::error::Result;
use crate::rng::StreamRng;

/// Whether a model's utilities are on their natural (positive) scale or
/// are logarithms of a positive quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityScale {
    Positive,
    Log,
}

/// A design problem: prior-predictive simulation plus a utility on
/// (design, dataset) pairs.
///
/// `simulate` draws parameters from the prior and then data from the model
/// at the given observation times (sorted, possibly repeated). Both methods
/// must be pure given the generator, since the optimizers rely on stream
/// keyed reproducibility.
pub trait UtilityModel: Sync {
    type Data: Send;

    fn name(&self) -> &str;

    fn simulate(&self, design: &[f64], rng: &mut StreamRng) -> Result<Self::Data>;

    fn utility(&self, design: &[f64], data: &Self::Data, rng: &mut StreamRng) -> Result<f64>;

    fn scale(&self) -> UtilityScale {
        UtilityScale::Positive
    }

    /// Exact expected utility, when the model can compute it.
    fn exact_expected_utility(&self, _design: &[f64]) -> Option<Result<f64>> {
        None
    }

    /// One draw of `u(d, y)` with `y` from the prior predictive.
    fn sample_utility(&self, design: &[f64], rng: &mut StreamRng) -> Result<f64> {
        let data = self.simulate(design, rng)?;
        self.utility(design, &data, rng)
    }
}
