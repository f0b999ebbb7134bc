//! Noisy Gaussian bump in 15 dimensions.

use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UtilityModel;
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySpec {
    /// Bump centre, sorted ascending.
    pub mu: Vec<f64>,
    /// Divisor in the exponent.
    pub scale: f64,
    /// Log-scale sd of the multiplicative noise.
    pub sdlog: f64,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            mu: (0..15).map(|i| i as f64 + 0.5).collect(),
            scale: 20.0,
            sdlog: 0.03,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyModel {
    spec: ToySpec,
    noise: LogNormal<f64>,
}

impl ToyModel {
    pub fn new(spec: ToySpec) -> Result<Self> {
        if spec.mu.is_empty() || spec.mu.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("toy model: mu must be non-empty and sorted".into()));
        }
        if !(spec.sdlog > 0.0 && spec.scale > 0.0) {
            return Err(Error::Config("toy model: sdlog and scale must be positive".into()));
        }
        let noise = LogNormal::new(0.0, spec.sdlog)
            .map_err(|e| Error::Config(format!("toy model noise: {e}")))?;
        Ok(ToyModel { spec, noise })
    }

    pub fn spec(&self) -> &ToySpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.mu.len()
    }

    /// `exp(-|d - μ|² / scale)`.
    pub fn bump(&self, design: &[f64]) -> Result<f64> {
        if design.len() != self.spec.mu.len() {
            return Err(Error::Domain(format!(
                "toy model expects {} times, got {}",
                self.spec.mu.len(),
                design.len()
            )));
        }
        let ss: f64 = design.iter().zip(&self.spec.mu).map(|(d, m)| (d - m).powi(2)).sum();
        Ok((-ss / self.spec.scale).exp())
    }

    /// Bump times one lognormal draw.
    pub fn toy_utility(&self, design: &[f64], rng: &mut StreamRng) -> Result<f64> {
        Ok(self.bump(design)? * self.noise.sample(rng))
    }

    /// Bump times the lognormal mean `exp(sdlog²/2)`.
    pub fn toy_true_expected_utility(&self, design: &[f64]) -> Result<f64> {
        Ok(self.bump(design)? * (self.spec.sdlog.powi(2) / 2.0).exp())
    }
}

impl UtilityModel for ToyModel {
    type Data = ();

    fn name(&self) -> &str {
        "toy"
    }

    fn simulate(&self, _design: &[f64], _rng: &mut StreamRng) -> Result<()> {
        Ok(())
    }

    fn utility(&self, design: &[f64], _data: &(), rng: &mut StreamRng) -> Result<f64> {
        self.toy_utility(design, rng)
    }

    fn exact_expected_utility(&self, design: &[f64]) -> Option<Result<f64>> {
        Some(self.toy_true_expected_utility(design))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn model() -> ToyModel {
        ToyModel::new(ToySpec::default()).unwrap()
    }

    #[test]
    fn bump_values() {
        let m = model();
        let mu = m.spec().mu.clone();
        assert_eq!(m.bump(&mu).unwrap(), 1.0);
        let mut d = mu.clone();
        d[7] = 8.5;
        assert!((m.bump(&d).unwrap() - (-0.05f64).exp()).abs() < 1e-15);
        assert!((m.bump(&d).unwrap() - 0.9512).abs() < 1e-4);
        d[7] = 6.5;
        assert!((m.bump(&d).unwrap() - 0.9512).abs() < 1e-4);
    }

    #[test]
    fn single_coordinate_shift() {
        let m = model();
        let mu = m.spec().mu.clone();
        for i in 0..15 {
            for delta in [0.3, -1.7, 4.0] {
                let mut d = mu.clone();
                d[i] += delta;
                let expect = (-delta * delta / 20.0f64).exp();
                assert!((m.bump(&d).unwrap() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn expected_value_bounds() {
        let m = model();
        let mu = m.spec().mu.clone();
        let top = m.toy_true_expected_utility(&mu).unwrap();
        assert!((top - 0.00045f64.exp()).abs() < 1e-15);
        assert!((top - 1.00045).abs() < 1e-6);
        let d: Vec<f64> = mu.iter().map(|x| x + 0.7).collect();
        let v = m.toy_true_expected_utility(&d).unwrap();
        assert!(v > 0.0 && v <= 1.00046);
        let ratio = v / top;
        assert!((ratio - m.bump(&d).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn median_at_centre_is_one() {
        let m = model();
        let mu = m.spec().mu.clone();
        let mut rng = StreamRng::seed_from_u64(1);
        let mut u: Vec<f64> = (0..100_000).map(|_| m.toy_utility(&mu, &mut rng).unwrap()).collect();
        u.sort_by(f64::total_cmp);
        assert!((u[50_000] - 1.0).abs() < 0.002);
    }

    #[test]
    fn log_utility_is_normal() {
        let m = model();
        let mut d = m.spec().mu.clone();
        d[3] += 2.0;
        let centre = m.bump(&d).unwrap().ln();
        let mut rng = StreamRng::seed_from_u64(2);
        let n = 10_000;
        let mut z: Vec<f64> = (0..n)
            .map(|_| m.toy_utility(&d, &mut rng).unwrap().ln() - centre)
            .collect();
        assert!(z.iter().all(|x| x.is_finite()));
        z.sort_by(f64::total_cmp);
        let normal = Normal::new(0.0, 0.03).unwrap();
        let ks = z
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = normal.cdf(*x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / (n as f64).sqrt(), "KS {ks}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ToyModel::new(ToySpec { mu: vec![2.0, 1.0], ..Default::default() }).is_err());
        assert!(ToyModel::new(ToySpec { sdlog: 0.0, ..Default::default() }).is_err());
        assert!(model().bump(&[1.0]).is_err());
    }
}
