//! Cotton-aphid birth-death model under a normal moment closure.
//!
//! The population `N(t)` grows at rate `λN` and dies at rate `μNC`, with
//! `C(t)` the cumulative number of aphids ever born. Transitions between
//! observation days are bivariate normal with moments from the closure ODE,
//! started from the previous observed state with zero variance.

mod mcmc;
mod moments;

pub use mcmc::{random_walk_metropolis, AphidMCMCConfig, PosteriorDraws};
pub use moments::{integrate_moments, moment_rhs, trajectory, AphidParams, MomentState, DEFAULT_STEP};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UtilityModel;
use crate::rng::StreamRng;

const MAX_PRIOR_REJECTIONS: usize = 1000;
const REGULARIZATION: f64 = 1e-8;
const PSD_TOLERANCE: f64 = 1e-9;

/// Bivariate normal prior on `(λ, μ)`, truncated to the positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AphidPrior {
    pub mean: [f64; 2],
    /// `[var λ, cov, var μ]`.
    pub covariance: [f64; 3],
}

impl Default for AphidPrior {
    fn default() -> Self {
        AphidPrior {
            mean: [0.246, 0.000134],
            covariance: [0.0079 * 0.0079, 5.8e-8, 0.00002 * 0.00002],
        }
    }
}

impl AphidPrior {
    pub fn validate(&self) -> Result<()> {
        let [a, b, c] = self.covariance;
        if !(a > 0.0 && c > 0.0 && a * c - b * b > 0.0) {
            return Err(Error::Config("aphid prior covariance must be positive definite".into()));
        }
        Ok(())
    }

    pub fn correlation(&self) -> f64 {
        let [a, b, c] = self.covariance;
        b / (a * c).sqrt()
    }

    /// Log density of the untruncated normal; `-inf` off the positive
    /// quadrant.
    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        if !(x[0] > 0.0 && x[1] > 0.0) {
            return f64::NEG_INFINITY;
        }
        let [a, b, c] = self.covariance;
        log_normal2(x[0] - self.mean[0], x[1] - self.mean[1], a, b, c)
    }

    /// Draw from the truncated prior by rejection.
    pub fn sample(&self, rng: &mut StreamRng) -> Result<AphidParams> {
        let [a, b, c] = self.covariance;
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (c - l21 * l21).sqrt();
        for _ in 0..MAX_PRIOR_REJECTIONS {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let p = AphidParams::new(self.mean[0] + l11 * z1, self.mean[1] + l21 * z1 + l22 * z2);
            if p.is_positive() {
                return Ok(p);
            }
        }
        Err(Error::Config(format!(
            "aphid prior: no positive draw in {MAX_PRIOR_REJECTIONS} attempts"
        )))
    }
}

/// `log φ2((dx, dy); 0, [[a, b], [b, c]])`.
fn log_normal2(dx: f64, dy: f64, a: f64, b: f64, c: f64) -> f64 {
    let det = a * c - b * b;
    let q = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * q
}

/// Transition covariance with the near-singular case regularized.
fn transition_covariance(s: &MomentState) -> Result<(f64, f64, f64)> {
    if !s.is_psd(PSD_TOLERANCE) {
        return Err(Error::Numeric(format!(
            "transition covariance not positive semidefinite: v11 = {}, v12 = {}, v22 = {}",
            s.v11, s.v12, s.v22
        )));
    }
    let (mut a, b, mut c) = (s.v11.max(0.0), s.v12, s.v22.max(0.0));
    if !(a * c - b * b > 1e-12 * a * c) || a <= REGULARIZATION || c <= REGULARIZATION {
        a += REGULARIZATION;
        c += REGULARIZATION;
        if !(a * c - b * b > 0.0) {
            return Err(Error::Numeric("transition covariance is singular".into()));
        }
    }
    Ok((a, b, c))
}

/// Sorted distinct observation days.
pub fn distinct_days(design: &[f64]) -> Vec<f64> {
    let mut days = design.to_vec();
    days.sort_by(f64::total_cmp);
    days.dedup();
    days
}

#[derive(Debug, Clone, PartialEq)]
pub struct AphidData {
    /// Distinct observation days.
    pub days: Vec<f64>,
    pub n: Vec<f64>,
    pub c: Vec<f64>,
    /// Parameters that generated the data.
    pub truth: AphidParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AphidSpec {
    pub prior: AphidPrior,
    pub n0: f64,
    pub c0: f64,
    /// RK4 step in days.
    pub ode_step: f64,
    pub mcmc: AphidMCMCConfig,
}

impl Default for AphidSpec {
    fn default() -> Self {
        AphidSpec {
            prior: AphidPrior::default(),
            n0: 28.0,
            c0: 28.0,
            ode_step: DEFAULT_STEP,
            mcmc: AphidMCMCConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AphidModel {
    spec: AphidSpec,
}

impl AphidModel {
    pub fn new(spec: AphidSpec) -> Result<Self> {
        spec.prior.validate()?;
        spec.mcmc.validate()?;
        if !(spec.n0 >= 0.0 && spec.c0 >= spec.n0) {
            return Err(Error::Config("aphid model: need 0 <= n0 <= c0".into()));
        }
        if !(spec.ode_step > 0.0) {
            return Err(Error::Config("aphid model: ode_step must be positive".into()));
        }
        Ok(AphidModel { spec })
    }

    pub fn spec(&self) -> &AphidSpec {
        &self.spec
    }

    fn check_design(design: &[f64]) -> Result<()> {
        if design.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Domain("aphid observation days must be positive".into()));
        }
        Ok(())
    }

    /// Simulates at `design` with the given parameters.
    pub fn simulate_with(&self, design: &[f64], p: AphidParams, rng: &mut StreamRng) -> Result<AphidData> {
        Self::check_design(design)?;
        let days = distinct_days(design);
        let (mut n, mut c) = (self.spec.n0, self.spec.c0);
        let mut prev = 0.0;
        let mut ns = Vec::with_capacity(days.len());
        let mut cs = Vec::with_capacity(days.len());
        for &day in &days {
            let s = integrate_moments(&MomentState::observed(n, c), &p, day - prev, self.spec.ode_step)?;
            let (a, b, cc) = transition_covariance(&s)?;
            let l11 = a.sqrt();
            let l21 = b / l11;
            let l22 = (cc - l21 * l21).max(0.0).sqrt();
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            n = (s.m1 + l11 * z1).max(0.0);
            c = s.m2 + l21 * z1 + l22 * z2;
            if c < n {
                c = n;
            }
            ns.push(n);
            cs.push(c);
            prev = day;
        }
        Ok(AphidData {
            days,
            n: ns,
            c: cs,
            truth: p,
        })
    }

    /// Prior-predictive draw.
    pub fn aphid_simulate(&self, design: &[f64], rng: &mut StreamRng) -> Result<AphidData> {
        let p = self.spec.prior.sample(rng)?;
        self.simulate_with(design, p, rng)
    }

    /// Sum of bivariate normal transition log densities.
    pub fn aphid_loglik(&self, p: &AphidParams, design: &[f64], data: &AphidData) -> Result<f64> {
        let days = distinct_days(design);
        if days != data.days || data.n.len() != days.len() || data.c.len() != days.len() {
            return Err(Error::Domain("dataset does not match the design's distinct days".into()));
        }
        self.loglik_days(p, data)
    }

    fn loglik_days(&self, p: &AphidParams, data: &AphidData) -> Result<f64> {
        let (mut n, mut c) = (self.spec.n0, self.spec.c0);
        let mut prev = 0.0;
        let mut total = 0.0;
        for ((&day, &yn), &yc) in data.days.iter().zip(&data.n).zip(&data.c) {
            let s = integrate_moments(&MomentState::observed(n, c), p, day - prev, self.spec.ode_step)?;
            let (a, b, cc) = transition_covariance(&s)?;
            total += log_normal2(yn - s.m1, yc - s.m2, a, b, cc);
            n = yn;
            c = yc;
            prev = day;
        }
        Ok(total)
    }

    /// Random-walk Metropolis on prior × likelihood, started at `init`.
    pub fn aphid_posterior(
        &self,
        design: &[f64],
        data: &AphidData,
        cfg: &AphidMCMCConfig,
        init: AphidParams,
        rng: &mut StreamRng,
    ) -> Result<PosteriorDraws> {
        self.aphid_loglik(&init, design, data)?;
        let prior = self.spec.prior;
        random_walk_metropolis(
            |x| {
                let lp = prior.log_density(x);
                if !lp.is_finite() {
                    return lp;
                }
                match self.loglik_days(&AphidParams::new(x[0], x[1]), data) {
                    Ok(ll) => lp + ll,
                    Err(_) => f64::NEG_INFINITY,
                }
            },
            init.as_array(),
            cfg,
            prior.correlation(),
            rng,
        )
    }

    /// `1 / det` of the posterior sample covariance, with the chain started
    /// at the parameters that generated `data`.
    pub fn aphid_utility(&self, design: &[f64], data: &AphidData, rng: &mut StreamRng) -> Result<f64> {
        let post = self.aphid_posterior(design, data, &self.spec.mcmc, data.truth, rng)?;
        if let Some(w) = &post.warning {
            log::warn!("aphid posterior at {design:?}: {w}");
        }
        post.generalized_precision()
    }
}

impl UtilityModel for AphidModel {
    type Data = AphidData;

    fn name(&self) -> &str {
        "aphid"
    }

    fn simulate(&self, design: &[f64], rng: &mut StreamRng) -> Result<AphidData> {
        self.aphid_simulate(design, rng)
    }

    fn utility(&self, design: &[f64], data: &AphidData, rng: &mut StreamRng) -> Result<f64> {
        self.aphid_utility(design, data, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::time::Instant;

    fn model() -> AphidModel {
        AphidModel::new(AphidSpec::default()).unwrap()
    }

    fn prior_mean() -> AphidParams {
        AphidParams::new(0.246, 0.000134)
    }

    #[test]
    fn prior_correlation() {
        assert!((AphidPrior::default().correlation() - 0.367).abs() < 1e-3);
    }

    #[test]
    fn prior_draws_positive() {
        let mut rng = StreamRng::seed_from_u64(1);
        let prior = AphidPrior::default();
        for _ in 0..10_000 {
            assert!(prior.sample(&mut rng).unwrap().is_positive());
        }
        let hopeless = AphidPrior {
            mean: [-1.0, -1.0],
            covariance: [1e-6, 0.0, 1e-6],
        };
        assert!(matches!(hopeless.sample(&mut rng), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_days_collapse() {
        let mut rng = StreamRng::seed_from_u64(2);
        let data = model().aphid_simulate(&[10.0, 10.0, 20.0], &mut rng).unwrap();
        assert_eq!(data.days, vec![10.0, 20.0]);
        assert_eq!(data.n.len(), 2);
    }

    #[test]
    fn simulated_states_are_consistent() {
        let m = model();
        let mut rng = StreamRng::seed_from_u64(3);
        for _ in 0..500 {
            let data = m.aphid_simulate(&[5.0, 15.0, 30.0, 45.0, 49.0], &mut rng).unwrap();
            for (n, c) in data.n.iter().zip(&data.c) {
                assert!(*n >= 0.0 && c >= n);
            }
        }
    }

    #[test]
    fn day_one_mean() {
        let m = model();
        let mut rng = StreamRng::seed_from_u64(4);
        let draws = 10_000;
        let ns: Vec<f64> = (0..draws).map(|_| m.aphid_simulate(&[1.0], &mut rng).unwrap().n[0]).collect();
        let mean = ns.iter().sum::<f64>() / draws as f64;
        let sd = (ns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0)).sqrt();
        let m1 = integrate_moments(&MomentState::observed(28.0, 28.0), &prior_mean(), 1.0, DEFAULT_STEP)
            .unwrap()
            .m1;
        assert!((mean - m1).abs() < 3.0 * sd / (draws as f64).sqrt(), "{mean} vs {m1}");
    }

    #[test]
    fn loglik_at_means() {
        let m = model();
        let p = prior_mean();
        let days = [10.0, 20.0];
        let s1 = integrate_moments(&MomentState::observed(28.0, 28.0), &p, 10.0, DEFAULT_STEP).unwrap();
        let s2 = integrate_moments(&MomentState::observed(s1.m1, s1.m2), &p, 10.0, DEFAULT_STEP).unwrap();
        let data = AphidData {
            days: days.to_vec(),
            n: vec![s1.m1, s2.m1],
            c: vec![s1.m2, s2.m2],
            truth: p,
        };
        let ll = m.aphid_loglik(&p, &days, &data).unwrap();
        let det = |s: &MomentState| s.v11 * s.v22 - s.v12 * s.v12;
        let expect = -(2.0 * PI * det(&s1).sqrt()).ln() - (2.0 * PI * det(&s2).sqrt()).ln();
        assert!((ll - expect).abs() < 1e-9 * expect.abs(), "{ll} vs {expect}");
    }

    #[test]
    fn loglik_quadratic_in_deviation() {
        let m = model();
        let p = prior_mean();
        let s = integrate_moments(&MomentState::observed(28.0, 28.0), &p, 12.0, DEFAULT_STEP).unwrap();
        let at = |dev: f64| {
            let data = AphidData {
                days: vec![12.0],
                n: vec![s.m1 + dev],
                c: vec![s.m2 + dev],
                truth: p,
            };
            m.aphid_loglik(&p, &[12.0], &data).unwrap()
        };
        let (l0, l1, l2) = (at(0.0), at(3.0), at(6.0));
        // log density drop scales with the square of the deviation
        assert!(((l0 - l2) - 4.0 * (l0 - l1)).abs() < 1e-9 * (l0 - l2).abs());
        let det = s.v11 * s.v22 - s.v12 * s.v12;
        let q1 = 9.0 * (s.v22 - 2.0 * s.v12 + s.v11) / det;
        assert!(((l0 - l1) - q1 / 2.0).abs() < 1e-9 * q1);
    }

    #[test]
    fn loglik_finite_on_prior_predictive() {
        let m = model();
        let mut rng = StreamRng::seed_from_u64(5);
        let d = [10.0, 20.0, 30.0, 40.0];
        for _ in 0..1000 {
            let data = m.aphid_simulate(&d, &mut rng).unwrap();
            assert!(m.aphid_loglik(&data.truth, &d, &data).unwrap().is_finite());
        }
    }

    #[test]
    fn loglik_permutation_invariant() {
        let m = model();
        let mut rng = StreamRng::seed_from_u64(6);
        let data = m.aphid_simulate(&[8.0, 16.0, 33.0], &mut rng).unwrap();
        let a = m.aphid_loglik(&prior_mean(), &[8.0, 16.0, 33.0], &data).unwrap();
        let b = m.aphid_loglik(&prior_mean(), &[33.0, 8.0, 16.0, 8.0], &data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flat_likelihood_recovers_prior() {
        let prior = AphidPrior::default();
        let cfg = AphidMCMCConfig {
            iterations: 400_000,
            burn_in: 1000,
            proposal_sd: [0.004, 0.00001],
            proposal_correlation: None,
        };
        let mut rng = StreamRng::seed_from_u64(7);
        let post = random_walk_metropolis(
            |x| prior.log_density(x),
            prior.mean,
            &cfg,
            prior.correlation(),
            &mut rng,
        )
        .unwrap();
        // batch means for the Monte Carlo standard error
        let batches = 40;
        let per = post.draws.len() / batches;
        for j in 0..2 {
            let means: Vec<f64> = post
                .draws
                .chunks(per)
                .take(batches)
                .map(|c| c.iter().map(|x| x[j]).sum::<f64>() / c.len() as f64)
                .collect();
            let grand = means.iter().sum::<f64>() / batches as f64;
            let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
            let se = (var / batches as f64).sqrt();
            assert!((grand - prior.mean[j]).abs() < 3.0 * se, "coord {j}: {grand} ± {se}");
        }
    }

    #[test]
    fn utility_positive_and_fast() {
        let m = model();
        let mut rng = StreamRng::seed_from_u64(8);
        let d = [10.0, 20.0, 30.0, 40.0];
        for _ in 0..3 {
            let data = m.aphid_simulate(&d, &mut rng).unwrap();
            let start = Instant::now();
            let u = m.aphid_utility(&d, &data, &mut rng).unwrap();
            assert!(start.elapsed().as_secs_f64() <= 2.0);
            assert!(u > 0.0 && u.is_finite());
        }
    }
}
