//! Seeded random streams.
//!
//! Every random draw in a run comes from a ChaCha8 generator selected by a
//! master seed and a 64-bit stream id. Stream ids are derived from the
//! position of the work item in the algorithm (step, phase, iteration),
//! never from the thread executing it, so results do not depend on how work
//! is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator used for all simulation and sampling.
pub type StreamRng = ChaCha8Rng;

/// A (seed, stream) pair identifying one reproducible draw sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomSource { seed, stream }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Position of a work item within a run.
///
/// Packed as `step << 48 | phase << 40 | index`, so steps below 2^16 and
/// indices below 2^40 map to distinct streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub step: u64,
    pub phase: u8,
    pub index: u64,
}

impl StreamKey {
    pub fn new(step: usize, phase: u8, index: usize) -> Self {
        debug_assert!(step < 1 << 16 && (index as u64) < 1 << 40);
        StreamKey {
            step: step as u64,
            phase,
            index: index as u64,
        }
    }

    pub fn id(&self) -> u64 {
        (self.step << 48) | ((self.phase as u64) << 40) | self.index
    }
}

/// Seeds for independent runs derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSequence {
    pub master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> Self {
        SeedSequence { master }
    }

    /// Seed for repetition `rep`.
    pub fn run_seed(&self, rep: u64) -> u64 {
        splitmix64(self.master ^ splitmix64(rep.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    }

    pub fn source(&self, rep: u64, key: StreamKey) -> RandomSource {
        RandomSource::new(self.run_seed(rep), key.id())
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
