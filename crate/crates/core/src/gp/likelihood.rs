//! Profile marginal log-likelihood and its gradient with respect to ln γ.

use nalgebra::{DMatrix, DVector};

use crate::conditioning::{modified_kernel, preconditioner, PreconditionedFactor, Preconditioner};
use crate::error::{Error, Result};
use crate::kernels::{assemble_grad, assemble_gradfree, correlation_log_gamma_derivative, correlation_matrix, KernelSpec, LengthScales};
use crate::linalg;
use crate::problems::{stack_observations, EvaluationSet};

/// Value of the concentrated log-likelihood with its optimal mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    /// `−∞` when the residual variance vanishes.
    pub lnl: f64,
    pub beta: f64,
    pub sigma2: f64,
}

/// Whether the factored matrix is the preconditioned `K̃ + ηI` or the raw
/// `K∇ + ηI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Frame {
    Raw,
    Preconditioned,
}

/// Everything needed to evaluate the likelihood for a fixed data set.
pub(crate) struct Objective<'a> {
    pub points: &'a DMatrix<f64>,
    pub y: DVector<f64>,
    pub ones: DVector<f64>,
    pub spec: KernelSpec,
    pub eta: f64,
    pub frame: Frame,
}

pub(crate) struct Evaluation {
    pub profile: Profile,
    pub factor: PreconditionedFactor,
    /// `M⁻¹ Pf⁻¹ (y − β1̂)` in the factored frame.
    pub alpha: DVector<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(es: &'a EvaluationSet, spec: KernelSpec, eta: f64, frame: Frame) -> Self {
        let st = stack_observations(es);
        Self { points: es.points(), y: st.values, ones: st.indicator, spec, eta, frame }
    }

    pub fn factor(&self, gamma: &LengthScales) -> Result<PreconditionedFactor> {
        let n = self.points.nrows();
        let k = assemble_grad(&self.spec, gamma, self.points)?;
        match self.frame {
            Frame::Preconditioned => {
                let p = preconditioner(gamma, n);
                let kt = modified_kernel(&k, &p)?;
                PreconditionedFactor::factorize(kt, p, self.eta)
            }
            Frame::Raw => {
                let size = k.matrix().nrows();
                PreconditionedFactor::factorize(k.into_matrix(), Preconditioner::identity(size), self.eta)
            }
        }
    }

    pub fn evaluate(&self, gamma: &LengthScales) -> Result<Evaluation> {
        let factor = self.factor(gamma)?;
        let (profile, alpha) = profile_from_factor(&factor, &self.y, &self.ones);
        Ok(Evaluation { profile, factor, alpha })
    }

    /// The factored matrix `M` (before adding the nugget, which does not
    /// depend on γ in either frame) and its derivatives `∂M/∂ln γ_k`.
    pub fn matrix_derivatives(&self, gamma: &LengthScales) -> Vec<DMatrix<f64>> {
        let (n, d) = self.points.shape();
        let kt = correlation_matrix(&self.spec, gamma, self.points);
        let p = preconditioner(gamma, n);
        (0..d)
            .map(|k| {
                let mut w = correlation_log_gamma_derivative(&self.spec, gamma, self.points, k);
                // ∂P/∂ln γ_k = P E_k, with E_k selecting gradient block k
                let block = n * (k + 1)..n * (k + 2);
                for i in block.clone() {
                    for j in 0..w.ncols() {
                        w[(i, j)] += kt[(i, j)];
                        w[(j, i)] += kt[(j, i)];
                    }
                }
                match self.frame {
                    Frame::Preconditioned => {
                        for i in block {
                            w[(i, i)] += 2.0 * self.eta;
                        }
                        w
                    }
                    Frame::Raw => {
                        let pd = p.diagonal();
                        DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| pd[i] * w[(i, j)] * pd[j])
                    }
                }
            })
            .collect()
    }

    /// Gradient of lnL with respect to `ln γ`.
    pub fn gradient(&self, gamma: &LengthScales, ev: &Evaluation) -> Vec<f64> {
        self.gradient_from(&self.matrix_derivatives(gamma), ev)
    }

    pub fn gradient_from(&self, derivs: &[DMatrix<f64>], ev: &Evaluation) -> Vec<f64> {
        let m_inv = linalg::cholesky_inverse(&ev.factor.l_tilde);
        let sigma2 = ev.profile.sigma2;
        derivs
            .iter()
            .map(|dm| {
                let quad = ev.alpha.dot(&(dm * &ev.alpha));
                let trace = m_inv.component_mul(dm).sum();
                0.5 * (quad / sigma2 - trace)
            })
            .collect()
    }
}

/// Concentrated likelihood from a factor of `Pf M Pf`, given the stacked
/// observations `y` and the value indicator `1̂`.
pub(crate) fn profile_from_factor(
    factor: &PreconditionedFactor,
    y: &DVector<f64>,
    ones: &DVector<f64>,
) -> (Profile, DVector<f64>) {
    let l = &factor.l_tilde;
    let u = linalg::solve_lower(l, &factor.precond.apply_inverse(ones));
    let w = linalg::solve_lower(l, &factor.precond.apply_inverse(y));
    let beta = u.dot(&w) / u.dot(&u);
    let z = &w - &u * beta;
    let n = y.len() as f64;
    let sigma2 = z.dot(&z) / n;
    let alpha = linalg::solve_upper_transposed(l, &z);
    let lnl = if sigma2 > 0.0 { -0.5 * (n * sigma2.ln() + factor.log_det()) } else { f64::NEG_INFINITY };
    (Profile { lnl, beta, sigma2 }, alpha)
}

/// Concentrated log-likelihood of the gradient-enhanced model, evaluated
/// through the preconditioned factor of `K∇ + ηP²`.
pub fn log_likelihood_profile(es: &EvaluationSet, spec: &KernelSpec, gamma: &LengthScales, eta: f64) -> Result<Profile> {
    check_dims(es, gamma)?;
    Ok(Objective::new(es, *spec, eta, Frame::Preconditioned).evaluate(gamma)?.profile)
}

/// Same as [`log_likelihood_profile`] but for the unscaled `K∇ + ηI`.
pub fn log_likelihood_profile_raw(es: &EvaluationSet, spec: &KernelSpec, gamma: &LengthScales, eta: f64) -> Result<Profile> {
    check_dims(es, gamma)?;
    Ok(Objective::new(es, *spec, eta, Frame::Raw).evaluate(gamma)?.profile)
}

/// Gradient of [`log_likelihood_profile`] (or the raw variant) with respect
/// to `ln γ`.
pub fn log_likelihood_gradient(
    es: &EvaluationSet,
    spec: &KernelSpec,
    gamma: &LengthScales,
    eta: f64,
    preconditioned: bool,
) -> Result<Vec<f64>> {
    check_dims(es, gamma)?;
    let frame = if preconditioned { Frame::Preconditioned } else { Frame::Raw };
    let obj = Objective::new(es, *spec, eta, frame);
    let ev = obj.evaluate(gamma)?;
    Ok(obj.gradient(gamma, &ev))
}

/// Concentrated log-likelihood of the value-only model on `K + ηI`.
pub fn log_likelihood_gradfree(
    points: &DMatrix<f64>,
    values: &DVector<f64>,
    spec: &KernelSpec,
    gamma: &LengthScales,
    eta: f64,
) -> Result<Profile> {
    if points.nrows() != values.len() {
        return Err(Error::InvalidDimension(format!("{} points with {} values", points.nrows(), values.len())));
    }
    let k = assemble_gradfree(spec, gamma, points)?;
    let n = k.nrows();
    let factor = PreconditionedFactor::factorize(k, Preconditioner::identity(n), eta)?;
    Ok(profile_from_factor(&factor, values, &DVector::from_element(n, 1.0)).0)
}

pub(crate) fn check_dims(es: &EvaluationSet, gamma: &LengthScales) -> Result<()> {
    if es.dim() != gamma.dim() {
        return Err(Error::InvalidDimension(format!("{} length scales for {}-dimensional data", gamma.dim(), es.dim())));
    }
    Ok(())
}
