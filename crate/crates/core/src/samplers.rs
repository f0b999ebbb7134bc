//! Random primitives shared by the optimizers.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::grid::DesignLocation;

/// Cumulative-weight table for repeated categorical draws.
#[derive(Debug, Clone)]
pub struct CategoricalTable {
    cumulative: Vec<f64>,
}

impl CategoricalTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Domain(format!("invalid categorical weight {w}")));
            }
            acc += w;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Domain("categorical weights are all zero".into()));
        }
        Ok(CategoricalTable { cumulative })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let target = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        // zero-weight entries share the cumulative value of their predecessor
        // and are never selected; clamp guards the `target == total` edge
        idx.min(self.cumulative.len() - 1)
    }
}

/// Draws a location with probability proportional to its weight.
pub fn sample_categorical<R: Rng + ?Sized>(
    weights: &BTreeMap<DesignLocation, f64>,
    rng: &mut R,
) -> Result<DesignLocation> {
    let values: Vec<f64> = weights.values().copied().collect();
    let table = CategoricalTable::new(&values)?;
    let idx = table.sample(rng);
    Ok(weights.keys().nth(idx).expect("index within map").clone())
}

/// `N` draws with replacement, index `i` chosen with probability
/// proportional to `weights[i]`.
pub fn multinomial_resample<R: Rng + ?Sized>(
    weights: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let table = CategoricalTable::new(weights)?;
    Ok((0..n).map(|_| table.sample(rng)).collect())
}

/// Grid random walk moving each coordinate by the difference of two
/// independent Poisson(`lambda`) variates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbKernel {
    pub lambda: f64,
    /// Grid size `G`.
    pub points: usize,
    pub k: usize,
}

impl PerturbKernel {
    pub fn new(lambda: f64, points: usize, k: usize) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("perturbation mean must be >= 0, got {lambda}")));
        }
        Ok(PerturbKernel { lambda, points, k })
    }

    /// One Skellam displacement.
    pub fn displacement<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        if self.lambda == 0.0 {
            return 0;
        }
        let poisson = Poisson::new(self.lambda).expect("lambda validated");
        let a: f64 = poisson.sample(rng);
        let b: f64 = poisson.sample(rng);
        a as i64 - b as i64
    }

    /// Perturbs every coordinate, clamping to `[0, G - 1]`.
    pub fn perturb<R: Rng + ?Sized>(&self, loc: &DesignLocation, rng: &mut R) -> DesignLocation {
        if self.lambda == 0.0 {
            return loc.clone();
        }
        let max = self.points as i64 - 1;
        let mut moved: Vec<u32> = loc
            .indices()
            .iter()
            .map(|&i| (i as i64 + self.displacement(rng)).clamp(0, max) as u32)
            .collect();
        moved.sort_unstable();
        DesignLocation::from_sorted_unchecked(moved)
    }

    /// Perturbs every coordinate; `None` if any coordinate leaves the grid.
    /// Used where proposal symmetry matters.
    pub fn propose<R: Rng + ?Sized>(
        &self,
        loc: &DesignLocation,
        rng: &mut R,
    ) -> Option<DesignLocation> {
        let max = self.points as i64 - 1;
        let mut off_grid = false;
        // every coordinate draws its displacement so the stream position
        // does not depend on where the first excursion happens
        let moved: Vec<u32> = loc
            .indices()
            .iter()
            .map(|&i| {
                let j = i as i64 + self.displacement(rng);
                if j < 0 || j > max {
                    off_grid = true;
                }
                j.clamp(0, max) as u32
            })
            .collect();
        if off_grid {
            return None;
        }
        let mut moved = moved;
        moved.sort_unstable();
        Some(DesignLocation::from_sorted_unchecked(moved))
    }
}

/// Uniform draw over grid locations: each coordinate uniform on
/// `[0, G - 1]`, then canonicalized.
pub fn uniform_location<R: Rng + ?Sized>(points: usize, k: usize, rng: &mut R) -> DesignLocation {
    let mut idx: Vec<u32> = (0..k).map(|_| rng.random_range(0..points as u32)).collect();
    idx.sort_unstable();
    DesignLocation::from_sorted_unchecked(idx)
}

/// `log q(from | to) - log q(to | from)` for the sorted-multiset random walk.
///
/// Summing the symmetric coordinate kernel over all orderings leaves only
/// the multiplicity factorials of the two multisets.
pub fn log_proposal_ratio(from: &DesignLocation, to: &DesignLocation) -> f64 {
    to.log_multiplicity_factorial() - from.log_multiplicity_factorial()
}
