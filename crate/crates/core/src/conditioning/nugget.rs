//! Nugget values that bound the condition number of the kernel matrices.

use crate::error::{Error, Result};
use crate::kernels::LengthScales;

pub(crate) fn check_cond_max(cond_max: f64) -> Result<()> {
    if !(cond_max > 1.0) || cond_max.is_nan() {
        return Err(Error::InvalidInput(format!("cond_max must exceed 1, got {cond_max}")));
    }
    Ok(())
}

fn check_counts(n_x: usize, d: usize) -> Result<()> {
    if n_x == 0 || d == 0 {
        return Err(Error::InvalidDimension(format!("need n_x >= 1 and d >= 1, got n_x={n_x}, d={d}")));
    }
    Ok(())
}

/// Nugget for the gradient-free matrix: `n_x / (κ_max − 1)`.
pub fn nugget_gradfree(n_x: usize, cond_max: f64) -> Result<f64> {
    check_counts(n_x, 1)?;
    check_cond_max(cond_max)?;
    Ok(n_x as f64 / (cond_max - 1.0))
}

/// Trace-based nugget for the unpreconditioned gradient-enhanced matrix:
/// `n_x (Σγ_i² + 1) / (κ_max − 1)`.
pub fn nugget_grad_trace(gamma: &LengthScales, n_x: usize, cond_max: f64) -> Result<f64> {
    check_counts(n_x, gamma.dim())?;
    check_cond_max(cond_max)?;
    let sum_sq: f64 = gamma.as_slice().iter().map(|g| g * g).sum();
    Ok(n_x as f64 * (sum_sq + 1.0) / (cond_max - 1.0))
}

/// Trace-based nugget for the preconditioned matrix: `n_x (d + 1) / (κ_max − 1)`.
pub fn nugget_tilde_trace(n_x: usize, d: usize, cond_max: f64) -> Result<f64> {
    check_counts(n_x, d)?;
    check_cond_max(cond_max)?;
    Ok((n_x * (d + 1)) as f64 / (cond_max - 1.0))
}

/// Gershgorin bound on the absolute off-diagonal row sum of the
/// preconditioned Gaussian gradient-enhanced matrix.
pub fn u_gershgorin(n_x: usize, d: usize) -> f64 {
    if n_x <= 1 {
        return 0.0;
    }
    let d = d as f64;
    let root = (1.0 + 4.0 * d).sqrt();
    (n_x - 1) as f64 * 0.5 * (1.0 + root) * (-(1.0 + 2.0 * d - root) / (4.0 * d)).exp()
}

/// Gershgorin nugget for the preconditioned matrix: `(1 + u_G) / (κ_max − 1)`.
pub fn nugget_tilde_gershgorin(n_x: usize, d: usize, cond_max: f64) -> Result<f64> {
    check_counts(n_x, d)?;
    check_cond_max(cond_max)?;
    Ok((1.0 + u_gershgorin(n_x, d)) / (cond_max - 1.0))
}

/// Minimum point separation enforced by isotropic rescaling:
/// `min(2√d, (2 + √(4 + 2e² ln((n_x−1)(1+2√d)/2))) / e)`, and `2√d` for a
/// single point.
pub fn v_min_set(d: usize, n_x: usize) -> Result<f64> {
    check_counts(n_x, d)?;
    let two_sqrt_d = 2.0 * (d as f64).sqrt();
    if n_x == 1 {
        return Ok(two_sqrt_d);
    }
    let e = std::f64::consts::E;
    let log_term = ((n_x - 1) as f64 * (1.0 + two_sqrt_d) / 2.0).ln();
    let second = (2.0 + (4.0 + 2.0 * e * e * log_term).sqrt()) / e;
    Ok(two_sqrt_d.min(second))
}

/// Nugget paired with [`v_min_set`]:
/// `(1 + (n_x−1)(2√d/v) e^{v/(2√d) − 1}) / (κ_max − 1)`.
pub fn nugget_rescale(d: usize, n_x: usize, cond_max: f64) -> Result<f64> {
    check_cond_max(cond_max)?;
    let v = v_min_set(d, n_x)?;
    let two_sqrt_d = 2.0 * (d as f64).sqrt();
    let num = 1.0 + (n_x - 1) as f64 * (two_sqrt_d / v) * (v / two_sqrt_d - 1.0).exp();
    Ok(num / (cond_max - 1.0))
}
