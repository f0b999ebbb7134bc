//! Running expected-utility estimates over visited design locations and the
//! thresholded particle weights built from them.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DesignLocation, TimeGrid};
use crate::rank_tree::RankTree;

/// Positive floor added to shifted weights so the lowest retained design
/// keeps non-zero probability.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Normal-theory multiplier for central 95% intervals.
pub const CI_MULTIPLIER: f64 = 1.96;

/// Count, running mean and running sum of squared deviations of the utility
/// values recorded at one location.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParticleStats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl ParticleStats {
    pub fn record(&mut self, u: f64) {
        let old_mean = self.mean;
        let old_n = self.n as f64;
        self.mean = (u + old_n * old_mean) / (old_n + 1.0) + 0.0;
        self.m2 += (u - old_mean) * (u - self.mean);
        if self.m2 < 0.0 {
            self.m2 = 0.0;
        }
        self.n += 1;
    }

    /// Sample variance of the recorded utilities; `None` when `n <= 1`.
    pub fn variance(&self) -> Option<f64> {
        (self.n > 1).then(|| self.m2 / (self.n as f64 - 1.0))
    }

    /// Central 95% interval for the expected utility; `None` (unbounded)
    /// when `n <= 1`.
    pub fn interval(&self) -> Option<(f64, f64)> {
        let var = self.variance()?;
        let half = CI_MULTIPLIER * var.sqrt() / (self.n as f64).sqrt();
        Some((self.mean - half, self.mean + half))
    }
}

/// One row of a top-design table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopDesign {
    pub location: DesignLocation,
    pub design: Vec<f64>,
    pub mean: f64,
    /// `None` when the interval is unbounded (`n <= 1`).
    pub interval: Option<(f64, f64)>,
    pub n: u64,
}

impl TopDesign {
    pub fn ci_width(&self) -> f64 {
        match self.interval {
            Some((lo, hi)) => hi - lo,
            None => f64::INFINITY,
        }
    }
}

/// Particle representation of the design search: statistics for every
/// visited location plus the threshold defining the active weights.
///
/// Active weights are a function of the current statistics and the
/// threshold set by the last [`refresh_weights`](Self::refresh_weights):
/// the `ceil(alpha * V)` visited locations with the largest means (ties at
/// the cut included) carry weight `mean - min_visited_mean + WEIGHT_FLOOR`,
/// all others zero.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    grid: TimeGrid,
    locations: Vec<DesignLocation>,
    stats: Vec<ParticleStats>,
    slots: HashMap<DesignLocation, usize>,
    ranks: RankTree,
    alpha: Option<f64>,
    /// Schedule position: step currently being run.
    pub step_index: usize,
    /// Schedule position: next iteration within `step_index`.
    pub next_iteration: usize,
}

/// Snapshot of the active set used for drawing locations.
#[derive(Debug, Clone, Copy)]
pub struct ActiveView {
    retained: usize,
    base: f64,
    total: f64,
}

impl ActiveView {
    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }
}

impl ParticleSystem {
    pub fn new(grid: TimeGrid) -> Self {
        ParticleSystem {
            grid,
            locations: Vec::new(),
            stats: Vec::new(),
            slots: HashMap::new(),
            ranks: RankTree::new(),
            alpha: None,
            step_index: 0,
            next_iteration: 0,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Number of visited locations `V`.
    pub fn visited(&self) -> usize {
        self.locations.len()
    }

    pub fn total_evaluations(&self) -> u64 {
        self.stats.iter().map(|s| s.n).sum()
    }

    pub fn stats(&self, loc: &DesignLocation) -> Option<&ParticleStats> {
        self.slots.get(loc).map(|&s| &self.stats[s])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DesignLocation, &ParticleStats)> {
        self.locations.iter().zip(&self.stats)
    }

    /// Threshold used by the most recent refresh.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Records one utility evaluation at `loc`.
    pub fn update_stats(&mut self, loc: &DesignLocation, u: f64) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::Numeric(format!("non-finite utility {u} at {loc}")));
        }
        if !self.grid.contains(loc) {
            return Err(Error::Domain(format!("location {loc} is not on the grid")));
        }
        match self.slots.get(loc) {
            Some(&slot) => {
                self.stats[slot].record(u);
                self.ranks.update(slot, self.stats[slot].mean);
            }
            None => {
                let slot = self.locations.len();
                let mut stats = ParticleStats::default();
                stats.record(u);
                self.locations.push(loc.clone());
                self.stats.push(stats);
                self.slots.insert(loc.clone(), slot);
                self.ranks.insert(slot, stats.mean);
            }
        }
        Ok(())
    }

    /// Sets the threshold for the active weights.
    pub fn refresh_weights(&mut self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("threshold alpha must be in (0, 1], got {alpha}")));
        }
        if self.locations.is_empty() {
            return Err(Error::State("no visited locations to build weights from".into()));
        }
        self.alpha = Some(alpha);
        Ok(())
    }

    /// Current active set, or `None` before the first refresh.
    pub fn active_view(&self) -> Option<ActiveView> {
        let alpha = self.alpha?;
        let v = self.locations.len();
        if v == 0 {
            return None;
        }
        let keep = ((alpha * v as f64).ceil() as usize).clamp(1, v);
        let cut_slot = self.ranks.kth(v - keep)?;
        let cut_mean = self.ranks.mean(cut_slot);
        let retained = v - self.ranks.count_less(cut_mean);
        let base = self.ranks.offset(self.ranks.min_slot()?);
        let total = self.ranks.top_offset_sum(retained) - retained as f64 * base
            + retained as f64 * WEIGHT_FLOOR;
        Some(ActiveView {
            retained,
            base,
            total,
        })
    }

    /// Draws a location from the categorical distribution over the active
    /// weights.
    pub fn sample_active<R: Rng + ?Sized>(
        &self,
        view: &ActiveView,
        rng: &mut R,
    ) -> DesignLocation {
        let target = rng.random::<f64>() * view.total;
        let slot = self
            .ranks
            .sample_top(view.retained, view.base, WEIGHT_FLOOR, target);
        self.locations[slot].clone()
    }

    /// Materialized active weights (visited locations with positive weight).
    pub fn active_weights(&self) -> BTreeMap<DesignLocation, f64> {
        let mut out = BTreeMap::new();
        if let Some(view) = self.active_view() {
            let order = self.ranks.in_order();
            for &slot in order.iter().rev().take(view.retained) {
                let w = self.ranks.offset(slot) - view.base + WEIGHT_FLOOR;
                out.insert(self.locations[slot].clone(), w);
            }
        }
        out
    }

    /// Visited locations ordered by decreasing mean, ties by location.
    fn ranked(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.locations.len()).collect();
        order.sort_by(|&a, &b| {
            self.stats[b]
                .mean
                .total_cmp(&self.stats[a].mean)
                .then_with(|| self.locations[a].cmp(&self.locations[b]))
        });
        order
    }

    /// The `count` locations with the largest estimated expected utility.
    pub fn top_designs(&self, count: usize) -> Vec<TopDesign> {
        self.ranked()
            .into_iter()
            .take(count)
            .map(|slot| self.row(slot))
            .collect()
    }

    fn row(&self, slot: usize) -> TopDesign {
        let s = &self.stats[slot];
        TopDesign {
            location: self.locations[slot].clone(),
            design: self.grid.design(&self.locations[slot]),
            mean: s.mean,
            interval: s.interval(),
            n: s.n,
        }
    }

    pub fn summary(&self, loc: &DesignLocation) -> Option<TopDesign> {
        self.slots.get(loc).map(|&slot| self.row(slot))
    }

    /// Location with the largest estimated expected utility.
    pub fn best(&self) -> Option<TopDesign> {
        self.top_designs(1).into_iter().next()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            grid: self.grid,
            step_index: self.step_index,
            next_iteration: self.next_iteration,
            alpha: self.alpha,
            weight_origin: self.ranks.origin(),
            records: self
                .locations
                .iter()
                .zip(&self.stats)
                .map(|(loc, s)| CheckpointRecord {
                    indices: loc.indices().to_vec(),
                    n: s.n,
                    mean: s.mean,
                    m2: s.m2,
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Self> {
        if cp.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!("unknown checkpoint format {:?}", cp.format)));
        }
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                cp.version
            )));
        }
        cp.grid.validate()?;
        let mut system = ParticleSystem::new(cp.grid);
        system.ranks = RankTree::with_origin(cp.weight_origin);
        for (slot, rec) in cp.records.into_iter().enumerate() {
            let loc = cp.grid.location(rec.indices)?;
            if rec.n == 0 || !rec.mean.is_finite() || !(rec.m2 >= 0.0) {
                return Err(Error::Config(format!("invalid statistics for location {loc}")));
            }
            if system.slots.insert(loc.clone(), slot).is_some() {
                return Err(Error::Config(format!("duplicate checkpoint record {loc}")));
            }
            system.ranks.insert(slot, rec.mean);
            system.locations.push(loc);
            system.stats.push(ParticleStats {
                n: rec.n,
                mean: rec.mean,
                m2: rec.m2,
            });
        }
        if let Some(alpha) = cp.alpha {
            system.refresh_weights(alpha)?;
        }
        system.step_index = cp.step_index;
        system.next_iteration = cp.next_iteration;
        Ok(system)
    }
}

pub const CHECKPOINT_FORMAT: &str = "obsdesign-particles";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized particle state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub grid: TimeGrid,
    pub step_index: usize,
    pub next_iteration: usize,
    pub alpha: Option<f64>,
    pub weight_origin: Option<f64>,
    pub records: Vec<CheckpointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointRecord {
    pub indices: Vec<u32>,
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

/// Serializes the system as a JSON document.
pub fn save_checkpoint(system: &ParticleSystem) -> String {
    serde_json::to_string_pretty(&system.to_checkpoint()).expect("checkpoint serializes")
}

/// Parses a document written by [`save_checkpoint`].
pub fn load_checkpoint(text: &str) -> Result<ParticleSystem> {
    let cp: Checkpoint = serde_json::from_str(text)?;
    ParticleSystem::from_checkpoint(cp)
}
