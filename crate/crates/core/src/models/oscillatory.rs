//! Damped-oscillation regression `y_t = θ e^{-t} sin(6πt) + ε_t` with a
//! conjugate normal-gamma prior and a log generalized-precision utility.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{UtilityModel, UtilityScale};
use crate::rng::StreamRng;

/// `e^{-t} sin(6πt)`.
pub fn regressor(t: f64) -> f64 {
    (-t).exp() * (6.0 * PI * t).sin()
}

/// `θ | σ ~ N(b, σ²/c)`, `σ^{-2} ~ Ga(g, h)` (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NGPrior {
    pub b: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
}

impl Default for NGPrior {
    fn default() -> Self {
        NGPrior {
            b: 10.0,
            c: 0.01,
            g: 3.0,
            h: 3.0,
        }
    }
}

impl NGPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.g > 0.0 && self.h > 0.0) || !self.b.is_finite() {
            return Err(Error::Config(
                "oscillatory prior needs finite b and positive c, g, h".into(),
            ));
        }
        Ok(())
    }
}

/// Which expression is used for the posterior rate `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HForm {
    /// `h + (Σy² + b²c - B²C)/2`, from completing the square.
    #[default]
    Standard,
    /// `h + [Σ(y - Pf/Q)² + b²c + P²c/(QC)]/2`. Exceeds the standard form
    /// by `cb(cb + 2P)/(2C)`.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGPosterior {
    pub b: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
    /// No observation carries information about `θ` (`Q = 0`).
    pub degenerate: bool,
}

impl NGPosterior {
    pub fn theta_mean(&self) -> f64 {
        self.b
    }

    /// Marginal posterior variance of `θ` (needs `G > 1`).
    pub fn theta_variance(&self) -> f64 {
        self.h / (self.c * (self.g - 1.0))
    }

    /// Posterior mean of the precision `σ^{-2}`.
    pub fn precision_mean(&self) -> f64 {
        self.g / self.h
    }

    pub fn precision_variance(&self) -> f64 {
        self.g / (self.h * self.h)
    }

    /// `C (G-1)³ (G-2) / H³`.
    pub fn generalized_precision(&self) -> f64 {
        self.c * (self.g - 1.0).powi(3) * (self.g - 2.0) / self.h.powi(3)
    }
}

/// Sufficient statistics of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sums {
    p: f64,
    q: f64,
    yy: f64,
    k: usize,
}

fn sums(design: &[f64], y: &[f64]) -> Result<Sums> {
    if design.len() != y.len() {
        return Err(Error::Domain(format!(
            "{} observations for a {}-point design",
            y.len(),
            design.len()
        )));
    }
    let mut s = Sums {
        p: 0.0,
        q: 0.0,
        yy: 0.0,
        k: y.len(),
    };
    for (&t, &y) in design.iter().zip(y) {
        let f = regressor(t);
        s.p += f * y;
        s.q += f * f;
        s.yy += y * y;
    }
    Ok(s)
}

fn rate_standard(prior: &NGPrior, s: &Sums, b: f64, c: f64) -> f64 {
    prior.h + (s.yy + prior.b * prior.b * prior.c - b * b * c) / 2.0
}

fn rate_as_printed(prior: &NGPrior, design: &[f64], y: &[f64], s: &Sums, c: f64) -> f64 {
    if s.q == 0.0 {
        let cb = prior.c * prior.b;
        return rate_standard(prior, s, prior.b, c) + cb * (cb + 2.0 * s.p) / (2.0 * c);
    }
    let resid: f64 = design
        .iter()
        .zip(y)
        .map(|(&t, &y)| (y - s.p * regressor(t) / s.q).powi(2))
        .sum();
    prior.h
        + (resid + prior.b * prior.b * prior.c + s.p * s.p * prior.c / (s.q * c)) / 2.0
}

/// Both candidate posterior rates `(standard, as_printed)`.
pub fn posterior_rates(prior: &NGPrior, design: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let s = sums(design, y)?;
    let c = prior.c + s.q;
    let b = (prior.b * prior.c + s.p) / c;
    Ok((
        rate_standard(prior, &s, b, c),
        rate_as_printed(prior, design, y, &s, c),
    ))
}

/// Normal-gamma posterior after observing `y` at `design`.
pub fn conjugate_update(prior: &NGPrior, design: &[f64], y: &[f64], form: HForm) -> Result<NGPosterior> {
    let s = sums(design, y)?;
    if s.k == 0 {
        return Ok(NGPosterior {
            b: prior.b,
            c: prior.c,
            g: prior.g,
            h: prior.h,
            degenerate: false,
        });
    }
    let c = prior.c + s.q;
    let b = (prior.b * prior.c + s.p) / c;
    let h = match form {
        HForm::Standard => rate_standard(prior, &s, b, c),
        HForm::AsPrinted => rate_as_printed(prior, design, y, &s, c),
    };
    Ok(NGPosterior {
        b,
        c,
        g: prior.g + s.k as f64 / 2.0,
        // round-off only; the standard form is >= h analytically
        h: if form == HForm::Standard { h.max(prior.h) } else { h },
        degenerate: s.q == 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorySpec {
    pub prior: NGPrior,
    pub h_form: HForm,
}

#[derive(Debug, Clone)]
pub struct OscillatoryModel {
    spec: OscillatorySpec,
}

impl OscillatoryModel {
    pub fn new(spec: OscillatorySpec) -> Result<Self> {
        spec.prior.validate()?;
        Ok(OscillatoryModel { spec })
    }

    pub fn spec(&self) -> &OscillatorySpec {
        &self.spec
    }

    /// Prior-predictive draw; replicated times get independent noise.
    pub fn osc_simulate(&self, design: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        if design.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Domain("oscillatory design times must lie in [0, 1]".into()));
        }
        let p = &self.spec.prior;
        let tau = Gamma::new(p.g, 1.0 / p.h)
            .map_err(|e| Error::Numeric(format!("gamma prior: {e}")))?
            .sample(rng);
        let sigma = tau.recip().sqrt();
        let theta = p.b + sigma / p.c.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal);
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::Numeric(format!("noise: {e}")))?;
        Ok(design
            .iter()
            .map(|&t| theta * regressor(t) + noise.sample(rng))
            .collect())
    }

    /// `log C - 3 log H`.
    pub fn osc_utility(&self, design: &[f64], y: &[f64]) -> Result<f64> {
        let post = conjugate_update(&self.spec.prior, design, y, self.spec.h_form)?;
        if !(post.h > 0.0) {
            return Err(Error::Numeric(format!("posterior rate H = {} is not positive", post.h)));
        }
        Ok(post.c.ln() - 3.0 * post.h.ln())
    }
}

impl UtilityModel for OscillatoryModel {
    type Data = Vec<f64>;

    fn name(&self) -> &str {
        "oscillatory"
    }

    fn simulate(&self, design: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        self.osc_simulate(design, rng)
    }

    fn utility(&self, design: &[f64], data: &Vec<f64>, _rng: &mut StreamRng) -> Result<f64> {
        self.osc_utility(design, data)
    }

    fn scale(&self) -> UtilityScale {
        UtilityScale::Log
    }
}
