//! Discretised design space: observation times on a regular grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid of candidate observation times, `t_min, t_min + step, ...`,
/// up to and including `t_max` when it falls on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    /// Number of observation times in a design.
    pub k: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, step: f64, k: usize) -> Result<Self> {
        let grid = TimeGrid {
            t_min,
            t_max,
            step,
            k,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.step.is_finite()) {
            return Err(Error::Domain("grid bounds must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::Domain(format!("grid step must be positive, got {}", self.step)));
        }
        if self.t_min >= self.t_max {
            return Err(Error::Domain(format!(
                "grid requires t_min < t_max, got {} >= {}",
                self.t_min, self.t_max
            )));
        }
        if self.k == 0 {
            return Err(Error::Domain("design dimension k must be at least 1".into()));
        }
        if self.points() < 2 {
            return Err(Error::Domain("grid must contain at least two points".into()));
        }
        if self.points() > u32::MAX as usize {
            return Err(Error::Domain("grid has too many points".into()));
        }
        Ok(())
    }

    /// Number of grid points `G`. Both endpoints are included; a relative
    /// tolerance absorbs representation error in `(t_max - t_min) / step`.
    pub fn points(&self) -> usize {
        let span = (self.t_max - self.t_min) / self.step;
        (span + 1e-9 * span.max(1.0)).floor() as usize + 1
    }

    /// Time of grid point `index`, snapped to 12 decimals so that e.g. index
    /// 113 of a 0.01-step grid prints as 1.14.
    pub fn time(&self, index: u32) -> f64 {
        let t = self.t_min + index as f64 * self.step;
        let scaled = t * 1e12;
        if scaled.abs() < 9.0e15 {
            scaled.round() / 1e12
        } else {
            t
        }
    }

    /// Grid index of the point nearest to `t`, if `t` is within half a step
    /// of the grid.
    pub fn index_of(&self, t: f64) -> Option<u32> {
        let pos = ((t - self.t_min) / self.step).round();
        if pos < 0.0 || pos >= self.points() as f64 {
            return None;
        }
        if (self.time(pos as u32) - t).abs() > 0.5 * self.step {
            return None;
        }
        Some(pos as u32)
    }

    pub fn contains(&self, loc: &DesignLocation) -> bool {
        loc.len() == self.k && loc.indices().iter().all(|&i| (i as usize) < self.points())
    }

    /// Observation times of a design location.
    pub fn design(&self, loc: &DesignLocation) -> Vec<f64> {
        loc.indices().iter().map(|&i| self.time(i)).collect()
    }

    /// Validates `indices` against this grid and canonicalizes them.
    pub fn location(&self, indices: Vec<u32>) -> Result<DesignLocation> {
        if indices.len() != self.k {
            return Err(Error::Domain(format!(
                "design has {} indices, grid expects k = {}",
                indices.len(),
                self.k
            )));
        }
        canonicalize(indices, self.points())
    }

    /// Number of distinct canonical designs, `C(G + k - 1, k)`, saturating.
    pub fn design_count(&self) -> u128 {
        let g = self.points() as u128;
        let k = self.k as u128;
        let mut count: u128 = 1;
        for i in 0..k {
            count = match count.checked_mul(g + i) {
                Some(c) => c / (i + 1),
                None => return u128::MAX,
            };
        }
        count
    }
}

/// A design as a sorted multiset of grid indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignLocation(Vec<u32>);

impl DesignLocation {
    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds a location from indices already known to be valid.
    pub(crate) fn from_sorted_unchecked(indices: Vec<u32>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] <= w[1]));
        DesignLocation(indices)
    }

    /// `log(prod_v m_v!)` over the multiplicities `m_v` of repeated indices.
    pub(crate) fn log_multiplicity_factorial(&self) -> f64 {
        let mut total = 0.0;
        let mut run = 1u32;
        for w in self.0.windows(2) {
            if w[0] == w[1] {
                run += 1;
                total += (run as f64).ln();
            } else {
                run = 1;
            }
        }
        total
    }
}

impl std::fmt::Display for DesignLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "]")
    }
}

/// Sorts `indices` into canonical (non-decreasing) order after checking
/// each lies in `[0, points)`.
pub fn canonicalize(mut indices: Vec<u32>, points: usize) -> Result<DesignLocation> {
    if let Some(&bad) = indices.iter().find(|&&i| i as usize >= points) {
        return Err(Error::Domain(format!(
            "grid index {bad} out of range [0, {}]",
            points.saturating_sub(1)
        )));
    }
    indices.sort_unstable();
    Ok(DesignLocation(indices))
}

/// Observation times for `loc`, non-decreasing.
pub fn location_to_design(grid: &TimeGrid, loc: &DesignLocation) -> Vec<f64> {
    grid.design(loc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(vec![3, 1, 2], 10).unwrap().indices(), &[1, 2, 3]);
        assert_eq!(canonicalize(vec![5, 5], 10).unwrap().indices(), &[5, 5]);
        assert_eq!(canonicalize(vec![0], 10).unwrap().indices(), &[0]);
        assert!(matches!(canonicalize(vec![10], 10), Err(Error::Domain(_))));
    }

    #[test]
    fn design_times() {
        let death = TimeGrid::new(0.01, 10.0, 0.01, 1).unwrap();
        assert_eq!(death.points(), 1000);
        let loc = death.location(vec![160]).unwrap();
        assert!((location_to_design(&death, &loc)[0] - 1.61).abs() < 1e-12);

        let osc = TimeGrid::new(0.0, 1.0, 0.002, 2).unwrap();
        assert_eq!(osc.points(), 501);
        let loc = osc.location(vec![41, 0]).unwrap();
        let times = osc.design(&loc);
        assert_eq!(times[0], 0.0);
        assert!((times[1] - 0.082).abs() < 1e-12);
        assert_eq!(osc.index_of(0.082), Some(41));
    }

    #[test]
    fn grid_counts() {
        assert_eq!(TimeGrid::new(0.0, 15.0, 0.01, 15).unwrap().points(), 1501);
        assert_eq!(TimeGrid::new(1.0, 49.0, 1.0, 1).unwrap().points(), 49);
        let osc = TimeGrid::new(0.0, 1.0, 0.002, 2).unwrap();
        assert_eq!(osc.design_count(), 501 * 502 / 2);
    }

    #[test]
    fn invalid_grids() {
        assert!(TimeGrid::new(0.0, 1.0, 0.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.1, 0).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 2.0, 1).is_err());
    }

    #[test]
    fn multiplicity_factor() {
        let loc = DesignLocation(vec![1, 1, 1, 4, 4]);
        let expected = (6.0f64).ln() + (2.0f64).ln();
        assert!((loc.log_multiplicity_factorial() - expected).abs() < 1e-12);
        assert_eq!(DesignLocation(vec![1, 2]).log_multiplicity_factorial(), 0.0);
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(v in proptest::collection::vec(0u32..50, 1..8)) {
            let once = canonicalize(v.clone(), 50).unwrap();
            let twice = canonicalize(once.indices().to_vec(), 50).unwrap();
            prop_assert_eq!(&once, &twice);
            let mut sorted = v;
            sorted.sort();
            prop_assert_eq!(once.indices(), &sorted[..]);
        }
    }
}
