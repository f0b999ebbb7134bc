//! Second-order moment closure for the birth-death process with birth rate
//! `λN` and death rate `μNC`, where `C` counts all births so far.

use crate::error::{Error, Result};
use crate::ode::rk4;

/// Default integration step, in days.
pub const DEFAULT_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AphidParams {
    pub lambda: f64,
    pub mu: f64,
}

impl AphidParams {
    pub fn new(lambda: f64, mu: f64) -> Self {
        AphidParams { lambda, mu }
    }

    pub fn is_positive(&self) -> bool {
        self.lambda > 0.0 && self.mu > 0.0
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.lambda, self.mu]
    }
}

/// Means of `(N, C)` and their covariance entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentState {
    pub m1: f64,
    pub m2: f64,
    pub v11: f64,
    pub v12: f64,
    pub v22: f64,
}

impl MomentState {
    /// Known state `(n, c)` with zero variance.
    pub fn observed(n: f64, c: f64) -> Self {
        MomentState {
            m1: n,
            m2: c,
            ..Default::default()
        }
    }

    fn to_array(self) -> [f64; 5] {
        [self.m1, self.m2, self.v11, self.v12, self.v22]
    }

    fn from_array(a: [f64; 5]) -> Self {
        MomentState {
            m1: a[0],
            m2: a[1],
            v11: a[2],
            v12: a[3],
            v22: a[4],
        }
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.v11 >= -tol && self.v22 >= -tol && self.v11 * self.v22 - self.v12 * self.v12 >= -tol
    }
}

#[inline]
fn rhs(y: &[f64; 5], lambda: f64, mu: f64) -> [f64; 5] {
    let [m1, m2, v11, v12, v22] = *y;
    // the third-order cumulant term vanishes under the normal closure
    [
        lambda * m1 - mu * (m1 * m2 + v12),
        lambda * m1,
        mu * (v12 - 2.0 * m1 * v12 + m2 * (m1 - 2.0 * v11)) + lambda * (m1 + 2.0 * v11),
        lambda * (m1 + v11 + v12) - mu * (m1 * v22 + m2 * v12),
        lambda * (m1 + 2.0 * v12),
    ]
}

/// Time derivative of the moment state.
pub fn moment_rhs(s: &MomentState, p: &AphidParams) -> MomentState {
    MomentState::from_array(rhs(&s.to_array(), p.lambda, p.mu))
}

/// Classical RK4 over `dt_total` days with step `h`.
pub fn integrate_moments(init: &MomentState, p: &AphidParams, dt_total: f64, h: f64) -> Result<MomentState> {
    let (lambda, mu) = (p.lambda, p.mu);
    rk4(|y| rhs(y, lambda, mu), init.to_array(), dt_total, h)
        .map(MomentState::from_array)
        .map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!("{msg} (lambda = {lambda}, mu = {mu})")),
            other => other,
        })
}

/// States at `0, step, 2·step, …, t_end` (the last point may be closer).
pub fn trajectory(init: &MomentState, p: &AphidParams, t_end: f64, step: f64, h: f64) -> Result<Vec<(f64, MomentState)>> {
    let mut out = vec![(0.0, *init)];
    let mut t = 0.0;
    let mut state = *init;
    while t < t_end {
        let dt = step.min(t_end - t);
        state = integrate_moments(&state, p, dt, h)?;
        t += dt;
        out.push((t, state));
    }
    Ok(out)
}
