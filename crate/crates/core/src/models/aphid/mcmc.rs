//! Bivariate random-walk Metropolis.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AphidMCMCConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Proposal standard deviations for `(λ, μ)`.
    pub proposal_sd: [f64; 2],
    /// Proposal correlation; `None` uses the prior correlation.
    pub proposal_correlation: Option<f64>,
}

impl Default for AphidMCMCConfig {
    fn default() -> Self {
        AphidMCMCConfig {
            iterations: 10_000,
            burn_in: 500,
            proposal_sd: [0.0009, 0.000004],
            proposal_correlation: None,
        }
    }
}

impl AphidMCMCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::Config("mcmc: iterations must exceed burn_in".into()));
        }
        if !(self.proposal_sd[0] > 0.0 && self.proposal_sd[1] > 0.0) {
            return Err(Error::Config("mcmc: proposal sds must be positive".into()));
        }
        if let Some(r) = self.proposal_correlation {
            if !(r > -1.0 && r < 1.0) {
                return Err(Error::Config("mcmc: proposal correlation must be in (-1, 1)".into()));
            }
        }
        Ok(())
    }
}

/// Post-burn-in draws and chain diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub draws: Vec<[f64; 2]>,
    pub acceptance_rate: f64,
    pub warning: Option<String>,
}

impl PosteriorDraws {
    pub fn mean(&self) -> [f64; 2] {
        let n = self.draws.len() as f64;
        let mut m = [0.0; 2];
        for d in &self.draws {
            m[0] += d[0];
            m[1] += d[1];
        }
        [m[0] / n, m[1] / n]
    }

    /// Sample covariance `[s11, s12, s22]`.
    pub fn covariance(&self) -> [f64; 3] {
        let m = self.mean();
        let n = self.draws.len() as f64;
        let mut s = [0.0; 3];
        for d in &self.draws {
            let (a, b) = (d[0] - m[0], d[1] - m[1]);
            s[0] += a * a;
            s[1] += a * b;
            s[2] += b * b;
        }
        s.map(|x| x / (n - 1.0))
    }

    /// `1 / det` of the sample covariance.
    pub fn generalized_precision(&self) -> Result<f64> {
        if self.draws.len() < 3 {
            return Err(Error::Config("too few posterior draws for a covariance".into()));
        }
        let [s11, s12, s22] = self.covariance();
        let det = s11 * s22 - s12 * s12;
        // relative test: the two parameters live on very different scales
        if !(det > 1e-12 * s11 * s22) || !(s11 > 0.0) || !(s22 > 0.0) {
            return Err(Error::Config(
                "posterior sample covariance is singular; the chain did not move".into(),
            ));
        }
        Ok(1.0 / det)
    }
}

/// Random-walk Metropolis on `log_target`, started at `init`, with a
/// correlated normal proposal. Non-finite target values reject.
pub fn random_walk_metropolis<F>(
    mut log_target: F,
    init: [f64; 2],
    cfg: &AphidMCMCConfig,
    correlation: f64,
    rng: &mut StreamRng,
) -> Result<PosteriorDraws>
where
    F: FnMut([f64; 2]) -> f64,
{
    cfg.validate()?;
    let rho = cfg.proposal_correlation.unwrap_or(correlation);
    let [s1, s2] = cfg.proposal_sd;
    let tail = (1.0 - rho * rho).sqrt();
    let mut x = init;
    let mut lx = log_target(x);
    if !lx.is_finite() {
        return Err(Error::Domain(format!("chain initialised where the target is {lx}")));
    }
    let mut accepted = 0usize;
    let mut draws = Vec::with_capacity(cfg.iterations - cfg.burn_in);
    for i in 0..cfg.iterations {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let y = [x[0] + s1 * z1, x[1] + s2 * (rho * z1 + tail * z2)];
        let ly = log_target(y);
        let u: f64 = rng.random();
        if ly.is_finite() && u.ln() < ly - lx {
            x = y;
            lx = ly;
            accepted += 1;
        }
        if i >= cfg.burn_in {
            draws.push(x);
        }
    }
    let acceptance_rate = accepted as f64 / cfg.iterations as f64;
    let warning = if acceptance_rate < 0.01 || acceptance_rate > 0.99 {
        Some(format!("acceptance rate {acceptance_rate:.4} outside [0.01, 0.99]"))
    } else {
        None
    };
    Ok(PosteriorDraws {
        draws,
        acceptance_rate,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn standard_normal_target() {
        let cfg = AphidMCMCConfig {
            iterations: 200_000,
            burn_in: 1000,
            proposal_sd: [1.5, 1.5],
            proposal_correlation: Some(0.0),
        };
        let mut rng = StreamRng::seed_from_u64(1);
        let post = random_walk_metropolis(|x| -(x[0] * x[0] + x[1] * x[1]) / 2.0, [0.0, 0.0], &cfg, 0.0, &mut rng)
            .unwrap();
        let m = post.mean();
        let s = post.covariance();
        assert!(m[0].abs() < 0.05 && m[1].abs() < 0.05, "{m:?}");
        assert!((s[0] - 1.0).abs() < 0.05 && (s[2] - 1.0).abs() < 0.05 && s[1].abs() < 0.05, "{s:?}");
        assert!(post.warning.is_none());
    }

    #[test]
    fn stuck_chain_is_singular() {
        let cfg = AphidMCMCConfig {
            iterations: 2000,
            burn_in: 0,
            ..Default::default()
        };
        let mut rng = StreamRng::seed_from_u64(2);
        // a target that is only finite at the start point
        let post = random_walk_metropolis(
            |x| if x == [0.25, 0.0001] { 0.0 } else { f64::NEG_INFINITY },
            [0.25, 0.0001],
            &cfg,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(post.acceptance_rate, 0.0);
        assert!(post.warning.is_some());
        assert!(matches!(post.generalized_precision(), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_config() {
        let cfg = AphidMCMCConfig {
            iterations: 10,
            burn_in: 10,
            ..Default::default()
        };
        let mut rng = StreamRng::seed_from_u64(3);
        assert!(random_walk_metropolis(|_| 0.0, [0.0, 0.0], &cfg, 0.0, &mut rng).is_err());
    }
}
