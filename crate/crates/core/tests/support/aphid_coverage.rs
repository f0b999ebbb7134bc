//! Frequentist coverage of the aphid posterior's 95% normal ellipse.

#![allow(dead_code)]

use obsdesign::models::aphid::AphidParams;
use obsdesign::models::AphidModel;
use obsdesign::{RandomSource, SeedSequence, StreamKey};

pub const DESIGN: [f64; 4] = [10.0, 20.0, 30.0, 40.0];

/// 95% quantile of the chi-square distribution with two degrees of freedom.
pub fn chi2_2_quantile(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}

/// Number of repetitions whose truth lies inside the ellipse.
pub fn coverage(model: &AphidModel, reps: usize, seed: u64) -> usize {
    let cut = chi2_2_quantile(0.95);
    let seeds = SeedSequence::new(seed);
    let mut covered = 0;
    for rep in 0..reps {
        let mut rng = RandomSource::new(seeds.run_seed(rep as u64), StreamKey::new(0, 0, 0).id()).rng();
        let data = model.aphid_simulate(&DESIGN, &mut rng).unwrap();
        let truth: AphidParams = data.truth;
        let post = model
            .aphid_posterior(&DESIGN, &data, &model.spec().mcmc, truth, &mut rng)
            .unwrap();
        let m = post.mean();
        let [s11, s12, s22] = post.covariance();
        let det = s11 * s22 - s12 * s12;
        let (d1, d2) = (truth.lambda - m[0], truth.mu - m[1]);
        let q = (s22 * d1 * d1 - 2.0 * s12 * d1 * d2 + s11 * d2 * d2) / det;
        if q <= cut {
            covered += 1;
        }
    }
    covered
}
