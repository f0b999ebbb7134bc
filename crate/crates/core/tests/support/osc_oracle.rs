//! Brute-force posterior moments for the damped-oscillation regression.
//!
//! The joint posterior of `(θ, τ)`, `τ = σ^{-2}`, is integrated on a nested
//! Gauss-Legendre grid in `(θ, log τ)`. Ranges come from numerically located
//! modes and curvatures; no closed-form posterior quantity is used.

#![allow(dead_code)]

use std::f64::consts::PI;

pub struct Instance {
    pub b: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
    pub design: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub theta_mean: f64,
    pub theta_var: f64,
    pub tau_mean: f64,
    pub tau_var: f64,
}

fn f(t: f64) -> f64 {
    (-t).exp() * (6.0 * PI * t).sin()
}

impl Instance {
    /// Unnormalized log joint density in `(θ, s = log τ)`, Jacobian included.
    pub fn log_density(&self, theta: f64, s: f64) -> f64 {
        let tau = s.exp();
        let k = self.y.len() as f64;
        let sse: f64 = self
            .design
            .iter()
            .zip(&self.y)
            .map(|(&t, &y)| (y - theta * f(t)).powi(2))
            .sum();
        // Ga(g, h) prior on τ, N(b, 1/(cτ)) on θ, N(θ f, 1/τ) likelihood, dτ = τ ds
        (self.g - 1.0) * s - self.h * tau + 0.5 * s - 0.5 * self.c * tau * (theta - self.b).powi(2) + 0.5 * k * s
            - 0.5 * tau * sse
            + s
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for j in 2..=n {
                    let q2 = ((2 * j - 1) as f64 * z * q1 - (j - 1) as f64 * q0) / j as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dp = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Maximizer of a unimodal function on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (g(a), g(b));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = g(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = g(a);
        }
        if (hi - lo).abs() < 1e-12 * (1.0 + lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Expands `[x - w, x + w]` until `g` is clearly lower at both ends, then maximizes.
fn maximize(x0: f64, w0: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut w = w0;
    let g0 = g(x0);
    while g(x0 - w) > g0 - 30.0 || g(x0 + w) > g0 - 30.0 {
        w *= 2.0;
        if w > 1e8 {
            break;
        }
    }
    golden_max(x0 - w, x0 + w, g)
}

/// Standard deviation implied by the curvature of `g` at its maximum `x`.
fn curvature_scale(x: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut e = 1e-3 * (1.0 + x.abs());
    loop {
        let d2 = (g(x + e) - 2.0 * g(x) + g(x - e)) / (e * e);
        if d2 < 0.0 {
            return (-1.0 / d2).sqrt();
        }
        e *= 4.0;
    }
}

const SPAN: f64 = 14.0;

pub struct Oracle {
    outer: (Vec<f64>, Vec<f64>),
    inner: (Vec<f64>, Vec<f64>),
}

impl Oracle {
    pub fn new(outer: usize, inner: usize) -> Self {
        Oracle {
            outer: gauss_legendre(outer),
            inner: gauss_legendre(inner),
        }
    }

    /// `(∫ p dθ, ∫ θ p dθ, ∫ θ² p dθ)` at fixed `s`, scaled by `exp(-shift)`.
    fn theta_integrals(&self, inst: &Instance, s: f64, shift: f64) -> [f64; 3] {
        let cond = |th: f64| inst.log_density(th, s);
        let mode = maximize(inst.b, 1.0, cond);
        let sd = curvature_scale(mode, cond);
        let mut out = [0.0; 3];
        for (z, w) in self.inner.0.iter().zip(&self.inner.1) {
            let th = mode + SPAN * sd * z;
            let p = (cond(th) - shift).exp() * w * SPAN * sd;
            out[0] += p;
            out[1] += p * th;
            out[2] += p * th * th;
        }
        out
    }

    pub fn moments(&self, inst: &Instance) -> Moments {
        // profile over θ to locate the joint mode in s
        let profile = |s: f64| {
            let th = maximize(inst.b, 1.0, |t| inst.log_density(t, s));
            inst.log_density(th, s)
        };
        let s_mode = maximize(0.0, 1.0, profile);
        let shift = profile(s_mode);
        let log_marginal = |s: f64| self.theta_integrals(inst, s, shift)[0].ln();
        let s_mode = maximize(s_mode, 0.5, log_marginal);
        let s_sd = curvature_scale(s_mode, log_marginal);

        let mut m = [0.0; 5];
        for (z, w) in self.outer.0.iter().zip(&self.outer.1) {
            let s = s_mode + SPAN * s_sd * z;
            let [p0, p1, p2] = self.theta_integrals(inst, s, shift);
            let wt = w * SPAN * s_sd;
            let tau = s.exp();
            m[0] += wt * p0;
            m[1] += wt * p1;
            m[2] += wt * p2;
            m[3] += wt * p0 * tau;
            m[4] += wt * p0 * tau * tau;
        }
        let theta_mean = m[1] / m[0];
        let tau_mean = m[3] / m[0];
        Moments {
            theta_mean,
            theta_var: m[2] / m[0] - theta_mean * theta_mean,
            tau_mean,
            tau_var: m[4] / m[0] - tau_mean * tau_mean,
        }
    }
}

/// Worst relative discrepancy over the four moments. The `θ` mean is
/// compared on the scale of its posterior standard deviation when it is
/// near zero.
pub fn discrepancy(oracle: &Moments, candidate: &Moments) -> f64 {
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale;
    let theta_scale = oracle.theta_mean.abs().max(oracle.theta_var.sqrt());
    [
        rel(candidate.theta_mean, oracle.theta_mean, theta_scale),
        rel(candidate.theta_var, oracle.theta_var, oracle.theta_var),
        rel(candidate.tau_mean, oracle.tau_mean, oracle.tau_mean),
        rel(candidate.tau_var, oracle.tau_var, oracle.tau_var),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub struct Study {
    pub instances: usize,
    /// Worst discrepancy of the completed-square rate.
    pub standard_worst: f64,
    /// Instances where the printed rate misses the oracle by more than the tolerance.
    pub printed_misses: usize,
    /// Worst relative gap between `H_printed - H_oracle` and `cb(cb + 2P)/(2C)`.
    pub gap_worst: f64,
}

pub const TOLERANCE: f64 = 1e-4;

fn closed_form(post: &obsdesign::models::oscillatory::NGPosterior) -> Moments {
    Moments {
        theta_mean: post.theta_mean(),
        theta_var: post.theta_variance(),
        tau_mean: post.precision_mean(),
        tau_var: post.precision_variance(),
    }
}

/// Random priors, designs and data; each compared against the oracle.
pub fn study(instances: usize, seed: u64) -> Study {
    use obsdesign::models::oscillatory::{conjugate_update, posterior_rates, HForm, NGPrior};
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let oracle = Oracle::new(160, 96);
    let mut out = Study {
        instances,
        standard_worst: 0.0,
        printed_misses: 0,
        gap_worst: 0.0,
    };
    for _ in 0..instances {
        let prior = NGPrior {
            b: rng.random_range(-10.0..10.0),
            c: 10f64.powf(rng.random_range(-2.0..0.5)),
            g: rng.random_range(2.0..5.0),
            h: rng.random_range(0.5..5.0),
        };
        let k = rng.random_range(1..=4);
        let design: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..0.99)).collect();
        let theta = prior.b + rng.random_range(-3.0..3.0);
        let y: Vec<f64> = design
            .iter()
            .map(|&t| theta * f(t) + rng.random_range(-1.5..1.5))
            .collect();
        let inst = Instance {
            b: prior.b,
            c: prior.c,
            g: prior.g,
            h: prior.h,
            design: design.clone(),
            y: y.clone(),
        };
        let truth = oracle.moments(&inst);

        let standard = conjugate_update(&prior, &design, &y, HForm::Standard).unwrap();
        let printed = conjugate_update(&prior, &design, &y, HForm::AsPrinted).unwrap();
        out.standard_worst = out.standard_worst.max(discrepancy(&truth, &closed_form(&standard)));
        if discrepancy(&truth, &closed_form(&printed)) > TOLERANCE {
            out.printed_misses += 1;
        }

        // the rate implied by the oracle's precision moments: E τ / Var τ
        let h_oracle = truth.tau_mean / truth.tau_var;
        let (_, h_printed) = posterior_rates(&prior, &design, &y).unwrap();
        let p: f64 = design.iter().zip(&y).map(|(&t, &y)| f(t) * y).sum();
        let cap_c = prior.c + design.iter().map(|&t| f(t) * f(t)).sum::<f64>();
        let cb = prior.c * prior.b;
        let predicted = cb * (cb + 2.0 * p) / (2.0 * cap_c);
        let gap = h_printed - h_oracle;
        let rel = (gap - predicted).abs() / h_oracle.max(predicted.abs());
        out.gap_worst = out.gap_worst.max(rel);
    }
    out
}
