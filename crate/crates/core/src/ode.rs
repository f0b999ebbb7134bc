//! Fixed-step classical Runge–Kutta integration.

use crate::error::{Error, Result};

/// Integrates `dy/dt = f(y)` over `duration` with step `h`; the final step
/// is shortened to land exactly on `duration`.
pub fn rk4<const N: usize, F>(f: F, y0: [f64; N], duration: f64, h: f64) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    if !(duration >= 0.0) || !(h > 0.0) {
        return Err(Error::Domain(format!(
            "integration needs duration >= 0 and step > 0, got {duration} and {h}"
        )));
    }
    let mut y = y0;
    let mut t = 0.0;
    let steps = (duration / h).ceil() as usize;
    for i in 0..steps {
        let dt = if i + 1 == steps { duration - t } else { h };
        if dt <= 0.0 {
            break;
        }
        y = rk4_step(&f, &y, dt);
        t += dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite state at t = {t}")));
        }
    }
    Ok(y)
}

#[inline]
pub fn rk4_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}
