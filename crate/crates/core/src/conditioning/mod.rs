//! Diagonal preconditioning, nugget selection, stable Cholesky
//! factorization and condition numbers.

mod audit;
mod bounds;
mod nugget;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{assemble_grad, GradKernelMatrix, KernelFamily, KernelSpec, LengthScales};
use crate::linalg;

pub use audit::{bound_draw, validate_bounds, BoundReport, DrawOutcome};
pub use bounds::{g1, g2, g3, g4, h1, h2, h3, nu3_star};
pub use nugget::{
    nugget_grad_trace, nugget_gradfree, nugget_rescale, nugget_tilde_gershgorin, nugget_tilde_trace, u_gershgorin,
    v_min_set,
};

/// Largest reported `log10 κ`; also the encoding of a non-positive-definite matrix.
pub const LOG10_KAPPA_CAP: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// No preconditioning; the fit constrains κ of `K∇ + ηI`.
    Baseline,
    /// Isotropic rescaling to a minimum point separation, then as baseline.
    Rescale,
    /// `P⁻¹K∇P⁻¹ + ηI` with the Gershgorin nugget; no κ constraint.
    Precondition,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Baseline, Method::Rescale, Method::Precondition];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Rescale => "rescale",
            Method::Precondition => "precondition",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "rescale" => Ok(Method::Rescale),
            "precondition" | "precon" => Ok(Method::Precondition),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuggetRule {
    /// `n_x (d + 1) / (κ_max − 1)`; holds for any kernel with a correlation matrix.
    Trace,
    /// `(1 + u_G) / (κ_max − 1)`; proven for the Gaussian kernel.
    Gershgorin,
}

impl NuggetRule {
    /// Gershgorin for the Gaussian kernel, trace otherwise.
    pub fn default_for(spec: &KernelSpec) -> Self {
        match spec.family {
            KernelFamily::Gaussian => NuggetRule::Gershgorin,
            _ => NuggetRule::Trace,
        }
    }
}

impl FromStr for NuggetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(NuggetRule::Trace),
            "gershgorin" => Ok(NuggetRule::Gershgorin),
            other => Err(Error::InvalidInput(format!("unknown nugget rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningPolicy {
    pub method: Method,
    pub cond_max: f64,
    pub nugget_rule: NuggetRule,
    /// Fixed nugget replacing the rule, e.g. a near-zero value to test interpolation.
    pub nugget_override: Option<f64>,
}

impl ConditioningPolicy {
    pub fn new(method: Method, cond_max: f64, nugget_rule: NuggetRule) -> Result<Self> {
        nugget::check_cond_max(cond_max)?;
        Ok(Self { method, cond_max, nugget_rule, nugget_override: None })
    }

    /// κ_max = 1e10 and the kernel's default nugget rule.
    pub fn for_kernel(method: Method, spec: &KernelSpec) -> Self {
        Self { method, cond_max: 1e10, nugget_rule: NuggetRule::default_for(spec), nugget_override: None }
    }

    pub fn with_nugget_override(mut self, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("nugget must be finite and >= 0, got {eta}")));
        }
        self.nugget_override = Some(eta);
        Ok(self)
    }

    /// Nugget from the rule alone (ignores method and override).
    pub fn rule_nugget(&self, n_x: usize, d: usize) -> Result<f64> {
        match self.nugget_rule {
            NuggetRule::Trace => nugget_tilde_trace(n_x, d, self.cond_max),
            NuggetRule::Gershgorin => nugget_tilde_gershgorin(n_x, d, self.cond_max),
        }
    }

    /// Nugget used when fitting `n_x` points in `d` dimensions.
    ///
    /// The rescale method pairs with its own nugget; baseline and precondition
    /// share the rule's value.
    pub fn nugget(&self, n_x: usize, d: usize) -> Result<f64> {
        if let Some(eta) = self.nugget_override {
            return Ok(eta);
        }
        match self.method {
            Method::Rescale => nugget_rescale(d, n_x, self.cond_max),
            Method::Baseline | Method::Precondition => self.rule_nugget(n_x, d),
        }
    }
}

/// Diagonal `P = diag(1×n_x, γ₁×n_x, …, γ_d×n_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    diag: DVector<f64>,
}

impl Preconditioner {
    pub fn identity(size: usize) -> Self {
        Self { diag: DVector::from_element(size, 1.0) }
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_mul(&self.diag)
    }

    pub fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_div(&self.diag)
    }

    pub fn log_det(&self) -> f64 {
        self.diag.iter().map(|p| p.ln()).sum()
    }
}

pub fn preconditioner(gamma: &LengthScales, n_x: usize) -> Preconditioner {
    Preconditioner { diag: DVector::from_vec(crate::kernels::scale_pattern(gamma.as_slice(), n_x)) }
}

/// `P⁻¹ K∇ P⁻¹`.
pub fn modified_kernel(k: &GradKernelMatrix, p: &Preconditioner) -> Result<DMatrix<f64>> {
    let m = k.matrix();
    if m.nrows() != p.len() {
        return Err(Error::InvalidDimension(format!("matrix of size {} with preconditioner of size {}", m.nrows(), p.len())));
    }
    let d = p.diagonal();
    Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (d[i] * d[j])))
}

/// Cholesky factor `L̃` of `K̃ + ηI` together with `P` and `η`, so that
/// `L = P L̃` factors `K∇ + ηP²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionedFactor {
    pub l_tilde: DMatrix<f64>,
    pub precond: Preconditioner,
    pub eta: f64,
}

impl PreconditionedFactor {
    /// Factors `m + ηI`, where `m` is already expressed in the preconditioned frame.
    pub fn factorize(mut m: DMatrix<f64>, precond: Preconditioner, eta: f64) -> Result<Self> {
        for i in 0..m.nrows() {
            m[(i, i)] += eta;
        }
        let l_tilde = linalg::cholesky(&m).map_err(|e| Error::Factorization { pivot: e.pivot, eta })?;
        Ok(Self { l_tilde, precond, eta })
    }

    pub fn size(&self) -> usize {
        self.l_tilde.nrows()
    }

    /// `L = P L̃`.
    pub fn l(&self) -> DMatrix<f64> {
        let p = self.precond.diagonal();
        DMatrix::from_fn(self.size(), self.size(), |i, j| p[i] * self.l_tilde[(i, j)])
    }

    /// `ln det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l_tilde.diagonal().iter().map(|v| v.ln()).sum::<f64>() + 2.0 * self.precond.log_det()
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let t = linalg::cholesky_solve(&self.l_tilde, &self.precond.apply_inverse(b));
        self.precond.apply_inverse(&t)
    }

    /// κ of the factored matrix `L̃ L̃ᵀ`.
    pub fn condition_number(&self) -> f64 {
        let m = &self.l_tilde * self.l_tilde.transpose();
        condition_number_sym(&m).unwrap_or(f64::INFINITY)
    }
}

/// Stable Cholesky factorization of the gradient-enhanced kernel matrix:
/// assemble `K∇`, scale by the preconditioner, add the policy nugget and
/// factor.
pub fn stable_cholesky(
    points: &DMatrix<f64>,
    gamma: &LengthScales,
    spec: &KernelSpec,
    policy: &ConditioningPolicy,
) -> Result<PreconditionedFactor> {
    let (n_x, d) = points.shape();
    let eta = match policy.nugget_override {
        Some(eta) => eta,
        None => policy.rule_nugget(n_x, d)?,
    };
    let k = assemble_grad(spec, gamma, points)?;
    let p = preconditioner(gamma, n_x);
    let kt = modified_kernel(&k, &p)?;
    PreconditionedFactor::factorize(kt, p, eta)
}

/// 2-norm condition number of a symmetric matrix; `+∞` when it is not
/// positive definite.
pub fn condition_number_sym(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    if linalg::max_asymmetry(m) > 1e-10 * scale {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    let eig = linalg::sym_eigenvalues(m);
    let (lmin, lmax) = (eig[0], eig[eig.len() - 1]);
    Ok(if lmin <= 0.0 { f64::INFINITY } else { lmax / lmin })
}

/// `log10 κ`, capped at [`LOG10_KAPPA_CAP`].
pub fn log10_kappa_capped(kappa: f64) -> f64 {
    if kappa.is_nan() {
        return LOG10_KAPPA_CAP;
    }
    kappa.log10().min(LOG10_KAPPA_CAP)
}
