//! Auxiliary bound functions used to show that the Gershgorin row sum of
//! the gradient rows never exceeds `u_G`.

use crate::error::{Error, Result};

fn check(nu: f64, d: usize, min_d: usize) -> Result<()> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidInput(format!("nu must be finite and >= 0, got {nu}")));
    }
    if d < min_d {
        return Err(Error::InvalidDimension(format!("requires d >= {min_d}, got {d}")));
    }
    Ok(())
}

/// Row-sum envelope for a gradient row: `(ν + 1 + (d−1)αν) e^{−(ν² + (d−1)α²)/2}`.
pub fn g1(nu: f64, alpha: f64, d: usize) -> Result<f64> {
    check(nu, d, 1)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let dm1 = (d - 1) as f64;
    Ok((nu + 1.0 + dm1 * alpha * nu) * (-(nu * nu + dm1 * alpha * alpha) / 2.0).exp())
}

/// `g1` maximized over α: `((ν + 1 + √h1)/2) e^{−ν²/2 + h2}`.
pub fn g2(nu: f64, d: usize) -> Result<f64> {
    check(nu, d, 2)?;
    let root = h1(nu, d)?.sqrt();
    Ok(0.5 * (nu + 1.0 + root) * (-nu * nu / 2.0 + h2(nu, d)?).exp())
}

/// Upper bound of `g2` on `[0, 1]`: `(√d ν + 1) e^{−ν²/2}`.
pub fn g3(nu: f64, d: usize) -> Result<f64> {
    check(nu, d, 2)?;
    Ok(((d as f64).sqrt() * nu + 1.0) * (-nu * nu / 2.0).exp())
}

/// Upper bound of `g2` for `ν ≥ 1`: `((ν + 1 + 2√d ν)/2) e^{−ν²/2}`.
pub fn g4(nu: f64, d: usize) -> Result<f64> {
    check(nu, d, 2)?;
    Ok(0.5 * (nu + 1.0 + 2.0 * (d as f64).sqrt() * nu) * (-nu * nu / 2.0).exp())
}

/// `(ν + 1)² + 4ν²(d − 1)`.
pub fn h1(nu: f64, d: usize) -> Result<f64> {
    check(nu, d, 1)?;
    Ok((nu + 1.0).powi(2) + 4.0 * nu * nu * (d - 1) as f64)
}

/// `((ν+1)√h1 − (ν+1)²) / (4ν²(d−1)) − 1/2`.
///
/// Evaluated in the rationalized form `(ν+1)/(√h1 + ν + 1) − 1/2`, which is
/// free of cancellation and equals its limit 0 at ν = 0. For `d = 1` the
/// printed form is 0/0 everywhere; the rationalized form gives 0.
pub fn h2(nu: f64, d: usize) -> Result<f64> {
    let root = h1(nu, d)?.sqrt();
    Ok((nu + 1.0) / (root + nu + 1.0) - 0.5)
}

/// Piecewise-linear upper bound of `√h1`.
pub fn h3(nu: f64, d: usize) -> Result<f64> {
    check(nu, d, 2)?;
    let s = (d as f64).sqrt();
    Ok(if nu <= 1.0 { (2.0 * s - 1.0) * nu + 1.0 } else { 2.0 * s * nu })
}

/// Maximizer of `g3`: `(−1 + √(1 + 4d)) / (2√d)`.
pub fn nu3_star(d: usize) -> Result<f64> {
    check(0.0, d, 1)?;
    let d = d as f64;
    Ok((-1.0 + (1.0 + 4.0 * d).sqrt()) / (2.0 * d.sqrt()))
}
