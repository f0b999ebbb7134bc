//! Pure death process with binomial thinning between observations and a
//! lognormal prior on the per-capita death rate.

use rand_distr::{Binomial, Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::UtilityModel;
use crate::quadrature::GaussHermite;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeathModelSpec {
    /// Initial population size.
    pub n: u32,
    pub prior_meanlog: f64,
    /// Variance of `log β`.
    pub prior_varlog: f64,
    /// Gauss-Hermite node count.
    pub nodes: usize,
}

impl Default for DeathModelSpec {
    fn default() -> Self {
        DeathModelSpec {
            n: 50,
            prior_meanlog: -0.005,
            prior_varlog: 0.01,
            nodes: 64,
        }
    }
}

impl DeathModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("death model: n must be at least 1".into()));
        }
        if !(self.prior_varlog > 0.0) || !self.prior_meanlog.is_finite() {
            return Err(Error::Config("death model: prior_varlog must be positive".into()));
        }
        if self.nodes < 16 {
            return Err(Error::Config("death model: at least 16 quadrature nodes".into()));
        }
        Ok(())
    }

    pub fn prior_sdlog(&self) -> f64 {
        self.prior_varlog.sqrt()
    }
}

/// Counts observed at the design times; non-increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeathDataset {
    pub counts: Vec<u32>,
}

/// `K_i = exp(log_scale) * k_i`, `K_i = ∫ β^i π(y | β) π(β) dβ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub log_scale: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
}

impl PosteriorMoments {
    /// `K_i` on the natural scale (may underflow for unlikely outcomes).
    pub fn k(&self, i: usize) -> f64 {
        let scaled = match i {
            0 => self.k0,
            1 => self.k1,
            2 => self.k2,
            _ => panic!("only K0, K1, K2 are tracked"),
        };
        scaled * self.log_scale.exp()
    }

    pub fn posterior_mean(&self) -> f64 {
        self.k1 / self.k0
    }

    pub fn posterior_variance(&self) -> f64 {
        self.k2 / self.k0 - (self.k1 / self.k0).powi(2)
    }

    /// `1 / Var(β | y) = K0² / (K2 K0 - K1²)`.
    pub fn precision(&self) -> f64 {
        self.k0 * self.k0 / (self.k2 * self.k0 - self.k1 * self.k1)
    }
}

#[derive(Debug, Clone)]
pub struct DeathModel {
    spec: DeathModelSpec,
    betas: Vec<f64>,
    log_weights: Vec<f64>,
}

impl DeathModel {
    pub fn new(spec: DeathModelSpec) -> Result<Self> {
        spec.validate()?;
        let (z, p) = GaussHermite::new(spec.nodes).standard_normal();
        let sd = spec.prior_sdlog();
        let mut betas = Vec::with_capacity(z.len());
        let mut log_weights = Vec::with_capacity(z.len());
        for (z, p) in z.into_iter().zip(p) {
            if p > 0.0 {
                betas.push((spec.prior_meanlog + sd * z).exp());
                log_weights.push(p.ln());
            }
        }
        Ok(DeathModel {
            spec,
            betas,
            log_weights,
        })
    }

    pub fn spec(&self) -> &DeathModelSpec {
        &self.spec
    }

    /// Sequential binomial survival from `n` at time zero.
    pub fn simulate_death(
        &self,
        design: &[f64],
        beta: f64,
        rng: &mut StreamRng,
    ) -> Result<DeathDataset> {
        check_design(design)?;
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("death rate must be positive, got {beta}")));
        }
        let mut alive = self.spec.n as u64;
        let mut prev = 0.0;
        let mut counts = Vec::with_capacity(design.len());
        for &t in design {
            let p = (-beta * (t - prev)).exp();
            if alive > 0 && p < 1.0 {
                alive = Binomial::new(alive, p)
                    .map_err(|e| Error::Numeric(format!("binomial draw: {e}")))?
                    .sample(rng);
            }
            counts.push(alive as u32);
            prev = t;
        }
        Ok(DeathDataset { counts })
    }

    fn check_counts(&self, y: &DeathDataset, design: &[f64]) -> Result<()> {
        if y.counts.len() != design.len() {
            return Err(Error::Domain(format!(
                "{} counts for a {}-point design",
                y.counts.len(),
                design.len()
            )));
        }
        let mut prev = self.spec.n;
        for &c in &y.counts {
            if c > prev {
                return Err(Error::Domain(format!("counts must be non-increasing from {}", self.spec.n)));
            }
            prev = c;
        }
        Ok(())
    }

    /// `K0, K1, K2` by Gauss-Hermite quadrature in `log β`, with the
    /// likelihood evaluated in log space.
    pub fn posterior_moments(&self, y: &DeathDataset, design: &[f64]) -> Result<PosteriorMoments> {
        check_design(design)?;
        self.check_counts(y, design)?;

        // binomial coefficients do not depend on β
        let mut log_coef = 0.0;
        let mut steps = Vec::with_capacity(design.len());
        let mut prev_t = 0.0;
        let mut prev_y = self.spec.n;
        for (&t, &c) in design.iter().zip(&y.counts) {
            log_coef += ln_choose(prev_y, c);
            steps.push((t - prev_t, prev_y, c));
            prev_t = t;
            prev_y = c;
        }

        let mut logs = Vec::with_capacity(self.betas.len());
        for (&beta, &lw) in self.betas.iter().zip(&self.log_weights) {
            let mut ll = log_coef + lw;
            for &(dt, from, to) in &steps {
                let died = (from - to) as f64;
                if dt == 0.0 {
                    if from != to {
                        ll = f64::NEG_INFINITY;
                    }
                    continue;
                }
                ll += -(to as f64) * beta * dt;
                if died > 0.0 {
                    ll += died * (-(-beta * dt).exp_m1()).ln();
                }
            }
            logs.push(ll);
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numeric("outcome has zero likelihood at every quadrature node".into()));
        }
        let (mut k0, mut k1, mut k2) = (0.0, 0.0, 0.0);
        for (&beta, &ll) in self.betas.iter().zip(&logs) {
            let w = (ll - max).exp();
            k0 += w;
            k1 += w * beta;
            k2 += w * beta * beta;
        }
        let moments = PosteriorMoments {
            log_scale: max,
            k0,
            k1,
            k2,
        };
        if !(k2 * k0 - k1 * k1 > 0.0) {
            return Err(Error::Numeric("degenerate posterior: K2 K0 - K1² <= 0".into()));
        }
        Ok(moments)
    }

    /// Posterior precision `1 / Var(β | y)`.
    pub fn death_utility(&self, design: &[f64], y: &DeathDataset) -> Result<f64> {
        Ok(self.posterior_moments(y, design)?.precision())
    }

    /// Expected utility by enumerating every monotone outcome:
    /// `Σ_y K0(y)³ / (K2(y) K0(y) - K1(y)²)`. Supports `k <= 2`.
    pub fn exact_expected_utility(&self, design: &[f64]) -> Result<f64> {
        self.enumerate(design, |m| m.log_scale.exp() * m.k0 * m.precision())
    }

    /// `Σ_y K0(y)`, which should be one.
    pub fn prior_predictive_mass(&self, design: &[f64]) -> Result<f64> {
        self.enumerate(design, |m| m.k(0))
    }

    fn enumerate(&self, design: &[f64], term: impl Fn(&PosteriorMoments) -> f64) -> Result<f64> {
        check_design(design)?;
        let n = self.spec.n;
        let mut total = 0.0;
        let mut add = |counts: Vec<u32>| -> Result<()> {
            match self.posterior_moments(&DeathDataset { counts }, design) {
                Ok(m) => total += term(&m),
                // impossible outcomes (repeated times with a drop) carry no mass
                Err(Error::Numeric(_)) if design.windows(2).any(|w| w[0] == w[1]) => {}
                Err(e) => return Err(e),
            }
            Ok(())
        };
        match design.len() {
            1 => {
                for y in 0..=n {
                    add(vec![y])?;
                }
            }
            2 => {
                for y1 in 0..=n {
                    for y2 in 0..=y1 {
                        add(vec![y1, y2])?;
                    }
                }
            }
            k => {
                return Err(Error::Capability(format!(
                    "exact enumeration supports at most 2 observation times, got {k}; \
                     use Monte Carlo estimation instead"
                )))
            }
        }
        Ok(total)
    }

    fn draw_beta(&self, rng: &mut StreamRng) -> f64 {
        LogNormal::new(self.spec.prior_meanlog, self.spec.prior_sdlog())
            .expect("validated prior")
            .sample(rng)
    }
}

impl UtilityModel for DeathModel {
    type Data = DeathDataset;

    fn name(&self) -> &str {
        "death"
    }

    fn simulate(&self, design: &[f64], rng: &mut StreamRng) -> Result<DeathDataset> {
        let beta = self.draw_beta(rng);
        self.simulate_death(design, beta, rng)
    }

    fn utility(&self, design: &[f64], data: &DeathDataset, _rng: &mut StreamRng) -> Result<f64> {
        self.death_utility(design, data)
    }

    fn exact_expected_utility(&self, design: &[f64]) -> Option<Result<f64>> {
        (design.len() <= 2).then(|| DeathModel::exact_expected_utility(self, design))
    }
}

fn check_design(design: &[f64]) -> Result<()> {
    if design.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("design times must be finite and non-negative".into()));
    }
    if design.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("design times must be sorted".into()));
    }
    Ok(())
}

fn ln_choose(n: u32, k: u32) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}
