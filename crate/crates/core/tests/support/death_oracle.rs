//! Expected utility of a single death-count observation by composite
//! Simpson integration over `log β`, independent of the library's
//! Gauss-Hermite enumeration.

#![allow(dead_code)]

pub struct DeathOracle {
    pub n: u32,
    pub meanlog: f64,
    pub sdlog: f64,
    /// Simpson panels (even).
    pub panels: usize,
}

impl DeathOracle {
    pub fn standard() -> Self {
        DeathOracle {
            n: 50,
            meanlog: -0.005,
            sdlog: 0.1,
            panels: 2000,
        }
    }

    /// `Σ_y p(y) / Var(β | y)` for one observation at `t`.
    pub fn expected_utility(&self, t: f64) -> f64 {
        let h = 20.0 / self.panels as f64;
        let nodes: Vec<(f64, f64)> = (0..=self.panels)
            .map(|i| {
                let z = -10.0 + i as f64 * h;
                let simpson = if i == 0 || i == self.panels {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                ((self.meanlog + self.sdlog * z).exp(), simpson * h / 3.0 * density)
            })
            .collect();
        let n = self.n as f64;
        let mut total = 0.0;
        for y in 0..=self.n {
            let y = y as f64;
            let ln_choose = ln_factorial(n) - ln_factorial(y) - ln_factorial(n - y);
            let (mut k0, mut k1, mut k2) = (0.0, 0.0, 0.0);
            for &(beta, w) in &nodes {
                let p = (-beta * t).exp();
                let lik = (ln_choose + y * p.ln() + (n - y) * (1.0 - p).ln()).exp();
                let lik = if lik.is_finite() { lik } else { 0.0 };
                k0 += w * lik;
                k1 += w * lik * beta;
                k2 += w * lik * beta * beta;
            }
            if k0 > 0.0 {
                let var = k2 / k0 - (k1 / k0).powi(2);
                total += k0 / var;
            }
        }
        total
    }
}

fn ln_factorial(x: f64) -> f64 {
    (1..=x as u64).map(|i| (i as f64).ln()).sum()
}
