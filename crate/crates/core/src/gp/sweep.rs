//! Condition numbers and likelihoods over a 2-D grid of length scales.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::likelihood::{log_likelihood_gradfree, log_likelihood_profile};
use crate::conditioning::{
    condition_number_sym, log10_kappa_capped, modified_kernel, nugget_rescale, preconditioner, v_min_set,
};
use crate::error::{Error, Result};
use crate::kernels::{assemble_grad, assemble_gradfree, KernelSpec, LengthScales};
use crate::problems::EvaluationSet;

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(Error::InvalidInput(format!("log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}] x {n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

/// Nuggets and optional rescaling shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSetup {
    pub spec: KernelSpec,
    /// Nugget of the value-only, gradient-enhanced and preconditioned matrices.
    pub eta: f64,
    /// `(τ, η)` of the rescaled matrix, when that column is wanted.
    pub rescale: Option<(f64, f64)>,
}

impl SweepSetup {
    /// Adds the rescaled column with `τ = v_min_set / min distance` and the
    /// matching nugget.
    pub fn with_rescale(mut self, es: &EvaluationSet, cond_max: f64) -> Result<Self> {
        let (n_x, d) = (es.n_points(), es.dim());
        let vmin = es
            .min_pairwise_distance()
            .filter(|v| *v > 0.0)
            .ok_or_else(|| Error::InvalidInput("rescaling needs at least two distinct points".into()))?;
        let tau = v_min_set(d, n_x)? / vmin;
        self.rescale = Some((tau, nugget_rescale(d, n_x, cond_max)?));
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma: Vec<f64>,
    pub log10_kappa_baseline_gradfree: f64,
    pub log10_kappa_baseline_grad: f64,
    pub log10_kappa_precon: f64,
    pub log10_kappa_rescale: Option<f64>,
    /// NaN when the value-only matrix cannot be factored.
    pub lnl_gradfree: f64,
    /// Log-likelihood of the preconditioned model; NaN on factorization failure.
    pub lnl_grad: f64,
}

fn log10_kappa_with_nugget(mut m: DMatrix<f64>, eta: f64) -> Result<f64> {
    for i in 0..m.nrows() {
        m[(i, i)] += eta;
    }
    Ok(log10_kappa_capped(condition_number_sym(&m)?))
}

pub fn sweep_cell(es: &EvaluationSet, setup: &SweepSetup, gamma: &LengthScales) -> Result<SweepCell> {
    let points = es.points();
    let eta = setup.eta;
    let kf = assemble_gradfree(&setup.spec, gamma, points)?;
    let kg = assemble_grad(&setup.spec, gamma, points)?;
    let kt = modified_kernel(&kg, &preconditioner(gamma, es.n_points()))?;
    let rescale = match setup.rescale {
        Some((tau, eta_r)) => {
            let scaled = points * tau;
            Some(log10_kappa_with_nugget(assemble_grad(&setup.spec, gamma, &scaled)?.into_matrix(), eta_r)?)
        }
        None => None,
    };
    Ok(SweepCell {
        gamma: gamma.as_slice().to_vec(),
        log10_kappa_baseline_gradfree: log10_kappa_with_nugget(kf, eta)?,
        log10_kappa_baseline_grad: log10_kappa_with_nugget(kg.into_matrix(), eta)?,
        log10_kappa_precon: log10_kappa_with_nugget(kt, eta)?,
        log10_kappa_rescale: rescale,
        lnl_gradfree: log_likelihood_gradfree(points, es.values(), &setup.spec, gamma, eta).map_or(f64::NAN, |p| p.lnl),
        lnl_grad: log_likelihood_profile(es, &setup.spec, gamma, eta).map_or(f64::NAN, |p| p.lnl),
    })
}

/// Cells of the grid `g1 × g2`, with `g2` varying fastest.
pub fn sweep_2d(es: &EvaluationSet, setup: &SweepSetup, g1: &[f64], g2: &[f64]) -> Result<Vec<SweepCell>> {
    if es.dim() != 2 {
        return Err(Error::InvalidDimension(format!("a 2-D sweep needs 2-D data, got d = {}", es.dim())));
    }
    let mut cells = Vec::with_capacity(g1.len() * g2.len());
    for &a in g1 {
        for &b in g2 {
            cells.push(sweep_cell(es, setup, &LengthScales::new(vec![a, b])?)?);
        }
    }
    Ok(cells)
}

/// The cell maximizing `key`, ignoring NaN.
pub fn argmax_cell<'a>(cells: &'a [SweepCell], key: impl Fn(&SweepCell) -> f64) -> Option<&'a SweepCell> {
    cells
        .iter()
        .filter(|c| !key(c).is_nan())
        .max_by(|a, b| key(a).total_cmp(&key(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::nugget_tilde_gershgorin;
    use crate::problems::{reference_design_2d, Problem};

    fn dataset() -> EvaluationSet {
        EvaluationSet::from_problem(Problem::Rosenbrock, reference_design_2d()).unwrap()
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = log_grid(1e-2, 1e2, 5).unwrap();
        let expect = [1e-2, 1e-1, 1.0, 1e1, 1e2];
        for (a, b) in g.iter().zip(expect) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!(log_grid(1.0, 1.0, 3).is_err());
        assert!(log_grid(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn cell_matches_direct_computation() {
        let es = dataset();
        let eta = nugget_tilde_gershgorin(10, 2, 1e10).unwrap();
        let setup = SweepSetup { spec: KernelSpec::gaussian(), eta, rescale: None }.with_rescale(&es, 1e10).unwrap();
        let gamma = LengthScales::new(vec![3.0, 20.0]).unwrap();
        let cell = sweep_cell(&es, &setup, &gamma).unwrap();
        let mut k = assemble_gradfree(&setup.spec, &gamma, es.points()).unwrap();
        for i in 0..10 {
            k[(i, i)] += eta;
        }
        let direct = condition_number_sym(&k).unwrap().log10();
        assert!((cell.log10_kappa_baseline_gradfree - direct).abs() < 1e-9);
        assert!(cell.log10_kappa_precon <= 10.0);
        assert!(cell.log10_kappa_rescale.is_some());
        assert!(cell.lnl_grad.is_finite() && cell.lnl_gradfree.is_finite());
    }

    #[test]
    fn rejects_other_dimensions() {
        let pts = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.5, 0.2, 0.3, 0.9, 0.1]);
        let es = EvaluationSet::from_problem(Problem::Rosenbrock, pts).unwrap();
        let setup = SweepSetup { spec: KernelSpec::gaussian(), eta: 1e-9, rescale: None };
        assert!(sweep_2d(&es, &setup, &[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn argmax_skips_nan() {
        let mk = |v: f64| SweepCell {
            gamma: vec![v],
            log10_kappa_baseline_gradfree: 0.0,
            log10_kappa_baseline_grad: 0.0,
            log10_kappa_precon: 0.0,
            log10_kappa_rescale: None,
            lnl_gradfree: 0.0,
            lnl_grad: v,
        };
        let cells = [mk(1.0), mk(f64::NAN), mk(3.0), mk(2.0)];
        assert_eq!(argmax_cell(&cells, |c| c.lnl_grad).unwrap().gamma, vec![3.0]);
    }
}
