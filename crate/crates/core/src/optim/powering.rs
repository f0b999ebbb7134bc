use crate::error::{Error, Result};

/// Smallest number of designs whose normalized `u^J` weights sum to more
/// than `alpha`, taking the largest weights first.
pub fn powering_correspondence(expected_utils: &[f64], j: u32, alpha: f64) -> Result<usize> {
    if expected_utils.is_empty() {
        return Err(Error::Domain("no expected utilities given".into()));
    }
    if let Some(u) = expected_utils.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        return Err(Error::Domain(format!("expected utilities must be positive, got {u}")));
    }
    if j == 0 {
        return Err(Error::Domain("power J must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let max = expected_utils.iter().copied().fold(0.0, f64::max);
    let mut w: Vec<f64> = expected_utils.iter().map(|u| (u / max).powi(j as i32)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = w.iter().sum();
    // summation round-off must not turn an exact tie at alpha into a win
    let slack = 1e-12 * total;
    let mut acc = 0.0;
    for (i, x) in w.iter().enumerate() {
        acc += x;
        if acc - alpha * total > slack {
            return Ok(i + 1);
        }
    }
    Ok(w.len())
}
