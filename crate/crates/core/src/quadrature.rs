//! Gauss–Hermite quadrature.

use std::f64::consts::PI;

/// Nodes and weights for `∫ exp(-x²) f(x) dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule with `n` nodes, computed by Newton iteration on the
    /// orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes `z_i` and weights `p_i` with `E[f(Z)] ≈ Σ p_i f(z_i)` for a
    /// standard normal `Z`.
    pub fn standard_normal(&self) -> (Vec<f64>, Vec<f64>) {
        let z = self.nodes.iter().map(|x| x * std::f64::consts::SQRT_2).collect();
        let p = self.weights.iter().map(|w| w / PI.sqrt()).collect();
        (z, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 16, 64, 128] {
            let gh = GaussHermite::new(n);
            let s: f64 = gh.weights.iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-12, "n = {n}: {s}");
        }
    }

    #[test]
    fn normal_moments() {
        let (z, p) = GaussHermite::new(64).standard_normal();
        let moment = |k: i32| -> f64 { z.iter().zip(&p).map(|(z, p)| p * z.powi(k)).sum() };
        assert!(moment(1).abs() < 1e-13);
        assert!((moment(2) - 1.0).abs() < 1e-12);
        assert!((moment(4) - 3.0).abs() < 1e-11);
        assert!((moment(6) - 15.0).abs() < 1e-10);
        // lognormal mean, E[exp(sZ)] = exp(s²/2)
        let m: f64 = z.iter().zip(&p).map(|(z, p)| p * (0.7 * z).exp()).sum();
        assert!((m - (0.245f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn small_rules_match_tables() {
        let gh = GaussHermite::new(2);
        assert!((gh.nodes[0] - 0.5f64.sqrt()).abs() < 1e-14);
        let gh = GaussHermite::new(3);
        assert!((gh.nodes[0] - 1.5f64.sqrt()).abs() < 1e-14);
        assert!(gh.nodes[1].abs() < 1e-14);
        assert!((gh.weights[1] - 2.0 * PI.sqrt() / 3.0).abs() < 1e-14);
    }
}
