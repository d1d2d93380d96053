//! Stationary kernels, their cross-derivatives, and assembly of the
//! gradient-free and gradient-enhanced kernel matrices.
//!
//! Every kernel is written as a radial profile `φ(s)` of the squared scaled
//! distance `s = ‖r̃‖²`, with `r̃_i = γ_i (x_i − y_i)`. All derivatives follow
//! from `φ'`, `φ''` (and `φ'''` for hyperparameter gradients) by the chain
//! rule:
//!
//! * `∂k/∂x_i = 2φ' γ_i r̃_i`
//! * `∂k/∂y_j = −2φ' γ_j r̃_j`
//! * `∂²k/∂x_i∂y_j = −4φ'' γ_i γ_j r̃_i r̃_j − 2φ' δ_ij γ_i²`
//!
//! All three families satisfy `−2φ'(0) = 1`, so the gradient block diagonal
//! is `γ_i²` and the same diagonal preconditioner turns the gradient-enhanced
//! matrix into a correlation matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    /// `(1 + √3‖r̃‖ + ‖r̃‖²) e^{−√3‖r̃‖}`: the Matérn-5/2 kernel with its
    /// length scale stretched by √(5/3).
    #[serde(rename = "matern52")]
    Matern52AsWritten,
    #[serde(rename = "ratquad")]
    RationalQuadratic,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Matern52AsWritten => "matern52",
            KernelFamily::RationalQuadratic => "ratquad",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "matern52" | "matern52_as_written" => Ok(KernelFamily::Matern52AsWritten),
            "ratquad" | "rational_quadratic" => Ok(KernelFamily::RationalQuadratic),
            other => Err(Error::InvalidInput(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Kernel family plus the rational-quadratic shape parameter α (ignored by
/// the other families).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub alpha: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::gaussian()
    }
}

/// Radial profile value and its first three derivatives with respect to `s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Radial {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, alpha: f64) -> Result<Self> {
        if family == KernelFamily::RationalQuadratic && !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("rational quadratic needs alpha > 0, got {alpha}")));
        }
        Ok(Self { family, alpha })
    }

    pub fn gaussian() -> Self {
        Self { family: KernelFamily::Gaussian, alpha: 1.0 }
    }

    pub fn matern52() -> Self {
        Self { family: KernelFamily::Matern52AsWritten, alpha: 1.0 }
    }

    pub fn rational_quadratic(alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::RationalQuadratic, alpha)
    }

    pub(crate) fn radial(&self, s: f64) -> Radial {
        match self.family {
            KernelFamily::Gaussian => {
                let v = (-0.5 * s).exp();
                Radial { v, d1: -0.5 * v, d2: 0.25 * v, d3: -0.125 * v }
            }
            KernelFamily::Matern52AsWritten => {
                let r = s.sqrt();
                let e = (-SQRT3 * r).exp();
                // φ''' ~ 1/r near the origin but only ever multiplies r̃⁴ terms
                let d3 = if r < 1e-10 { 0.0 } else { -0.375 * SQRT3 * e / r };
                Radial { v: (1.0 + SQRT3 * r + s) * e, d1: -0.5 * (1.0 + SQRT3 * r) * e, d2: 0.75 * e, d3 }
            }
            KernelFamily::RationalQuadratic => {
                let a = self.alpha;
                let base = 1.0 + s / (2.0 * a);
                let v = base.powf(-a);
                let d1 = -0.5 * v / base;
                let d2 = 0.25 * (a + 1.0) / a * v / (base * base);
                let d3 = -0.125 * (a + 1.0) * (a + 2.0) / (a * a) * v / (base * base * base);
                Radial { v, d1, d2, d3 }
            }
        }
    }
}

/// Per-dimension inverse length scales γ, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthScales(Vec<f64>);

impl LengthScales {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidDimension("length scales need d >= 1".into()));
        }
        if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput(format!("length scales must be positive and finite, got {g}")));
        }
        Ok(Self(gamma))
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![1.0; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Kernel value at the scaled displacement `r̃`.
pub fn kernel_value(spec: &KernelSpec, rt: &[f64]) -> f64 {
    let s: f64 = rt.iter().map(|v| v * v).sum();
    spec.radial(s).v
}

/// First and mixed second derivatives of `k(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDerivs {
    pub value: f64,
    /// `∂k/∂x_i`
    pub dx: Vec<f64>,
    /// `∂k/∂y_j`
    pub dy: Vec<f64>,
    /// `∂²k/∂x_i∂y_j`, indexed `(i, j)`
    pub dxdy: DMatrix<f64>,
}

fn scaled_displacement(gamma: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
    gamma.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (a - b)).collect()
}

/// Closed-form Gaussian kernel derivatives.
pub fn kernel_derivs_gaussian(gamma: &LengthScales, x: &[f64], y: &[f64]) -> KernelDerivs {
    let g = gamma.as_slice();
    let d = g.len();
    assert!(x.len() == d && y.len() == d, "dimension mismatch");
    let r: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let k = (-0.5 * (0..d).map(|i| g[i] * g[i] * r[i] * r[i]).sum::<f64>()).exp();
    let dx = (0..d).map(|i| -g[i] * g[i] * r[i] * k).collect();
    let dy = (0..d).map(|j| g[j] * g[j] * r[j] * k).collect();
    let dxdy = DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { g[i] * g[i] } else { 0.0 };
        (delta - g[i] * g[i] * g[j] * g[j] * r[i] * r[j]) * k
    });
    KernelDerivs { value: k, dx, dy, dxdy }
}

/// Kernel derivatives for any family via the radial chain rule.
pub fn kernel_derivs(spec: &KernelSpec, gamma: &LengthScales, x: &[f64], y: &[f64]) -> KernelDerivs {
    let g = gamma.as_slice();
    let d = g.len();
    assert!(x.len() == d && y.len() == d, "dimension mismatch");
    let rt = scaled_displacement(g, x, y);
    let rad = spec.radial(rt.iter().map(|v| v * v).sum());
    let dx = (0..d).map(|i| 2.0 * rad.d1 * g[i] * rt[i]).collect();
    let dy = (0..d).map(|j| -2.0 * rad.d1 * g[j] * rt[j]).collect();
    let dxdy = DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { -2.0 * rad.d1 * g[i] * g[i] } else { 0.0 };
        delta - 4.0 * rad.d2 * g[i] * g[j] * rt[i] * rt[j]
    });
    KernelDerivs { value: rad.v, dx, dy, dxdy }
}

/// Skew-symmetric displacement matrices `(R_i)_{ab} = x_{ai} − x_{bi}`.
pub fn displacement_matrices(points: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let (n, d) = points.shape();
    (0..d)
        .map(|i| DMatrix::from_fn(n, n, |a, b| points[(a, i)] - points[(b, i)]))
        .collect()
}

fn check_gamma(gamma: &LengthScales, points: &DMatrix<f64>) -> Result<()> {
    if gamma.dim() != points.ncols() {
        return Err(Error::InvalidDimension(format!(
            "{} length scales for {}-dimensional points",
            gamma.dim(),
            points.ncols()
        )));
    }
    Ok(())
}

/// Gradient-free kernel matrix `K_{ab} = k(γ ⊙ (x_a − x_b))`.
pub fn assemble_gradfree(spec: &KernelSpec, gamma: &LengthScales, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_gamma(gamma, points)?;
    let g = gamma.as_slice();
    let (n, d) = points.shape();
    let mut k = DMatrix::identity(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let s: f64 = (0..d)
                .map(|i| {
                    let r = g[i] * (points[(a, i)] - points[(b, i)]);
                    r * r
                })
                .sum();
            let v = spec.radial(s).v;
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    Ok(k)
}

/// Gradient-enhanced kernel matrix of size `n_x(d+1)` with block layout
/// `[K, ∂K/∂y_j; ∂K/∂x_i, ∂²K/∂x_i∂y_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradKernelMatrix {
    matrix: DMatrix<f64>,
    n_x: usize,
    dim: usize,
}

impl GradKernelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn n_points(&self) -> usize {
        self.n_x
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Assembles the gradient-enhanced kernel matrix.
///
/// The Gaussian family is built from the Hadamard-product closed form with
/// the displacement matrices; the other families go through their radial
/// derivatives.
pub fn assemble_grad(spec: &KernelSpec, gamma: &LengthScales, points: &DMatrix<f64>) -> Result<GradKernelMatrix> {
    check_gamma(gamma, points)?;
    let spec = KernelSpec::new(spec.family, spec.alpha)?;
    let (n, d) = points.shape();
    let matrix = match spec.family {
        KernelFamily::Gaussian => gaussian_closed_form(gamma.as_slice(), points),
        _ => {
            let mut m = correlation_matrix(&spec, gamma, points);
            let p = scale_pattern(gamma.as_slice(), n);
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    m[(i, j)] *= p[i] * p[j];
                }
            }
            m
        }
    };
    Ok(GradKernelMatrix { matrix: mirror_upper(matrix), n_x: n, dim: d })
}

fn gaussian_closed_form(g: &[f64], points: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let r = displacement_matrices(points);
    let k = DMatrix::from_fn(n, n, |a, b| {
        let s: f64 = (0..d).map(|i| g[i] * g[i] * r[i][(a, b)] * r[i][(a, b)]).sum();
        if a == b {
            1.0
        } else {
            (-0.5 * s).exp()
        }
    });
    let size = n * (d + 1);
    let mut m = DMatrix::zeros(size, size);
    m.view_mut((0, 0), (n, n)).copy_from(&k);
    for j in 0..d {
        let gj2 = g[j] * g[j];
        // γ_j² R_j ⊙ K above the diagonal, its negation below
        let top = r[j].component_mul(&k) * gj2;
        m.view_mut((0, n * (j + 1)), (n, n)).copy_from(&top);
        m.view_mut((n * (j + 1), 0), (n, n)).copy_from(&(-&top));
        for i in 0..d {
            let gi2 = g[i] * g[i];
            let block = if i == j {
                DMatrix::from_fn(n, n, |a, b| (gi2 - gi2 * gi2 * r[i][(a, b)] * r[i][(a, b)]) * k[(a, b)])
            } else {
                DMatrix::from_fn(n, n, |a, b| -gi2 * gj2 * r[i][(a, b)] * r[j][(a, b)] * k[(a, b)])
            };
            m.view_mut((n * (i + 1), n * (j + 1)), (n, n)).copy_from(&block);
        }
    }
    m
}

/// Copies the strict upper triangle onto the lower one so that symmetry is
/// exact regardless of floating-point evaluation order.
fn mirror_upper(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}

/// Diagonal pattern `[1×n, γ₁×n, …, γ_d×n]`.
pub(crate) fn scale_pattern(g: &[f64], n: usize) -> Vec<f64> {
    let mut p = vec![1.0; n * (g.len() + 1)];
    for (j, &gj) in g.iter().enumerate() {
        p[n * (j + 1)..n * (j + 2)].fill(gj);
    }
    p
}

/// Dimensionless gradient-enhanced matrix: derivatives taken with respect
/// to the scaled coordinates `x̃ = γ ⊙ x`. Unit diagonal for every family.
pub(crate) fn correlation_matrix(spec: &KernelSpec, gamma: &LengthScales, points: &DMatrix<f64>) -> DMatrix<f64> {
    let g = gamma.as_slice();
    let (n, d) = points.shape();
    let size = n * (d + 1);
    let mut m = DMatrix::zeros(size, size);
    let mut rt = vec![0.0; d];
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..d {
                rt[i] = g[i] * (points[(a, i)] - points[(b, i)]);
                s += rt[i] * rt[i];
            }
            let rad = spec.radial(s);
            m[(a, b)] = rad.v;
            for j in 0..d {
                m[(a, n * (j + 1) + b)] = -2.0 * rad.d1 * rt[j];
                m[(n * (j + 1) + a, b)] = 2.0 * rad.d1 * rt[j];
                for i in 0..d {
                    let delta = if i == j { -2.0 * rad.d1 } else { 0.0 };
                    m[(n * (i + 1) + a, n * (j + 1) + b)] = delta - 4.0 * rad.d2 * rt[i] * rt[j];
                }
            }
        }
    }
    mirror_upper(m)
}

/// Derivative of [`correlation_matrix`] with respect to `ln γ_k`.
pub(crate) fn correlation_log_gamma_derivative(
    spec: &KernelSpec,
    gamma: &LengthScales,
    points: &DMatrix<f64>,
    k: usize,
) -> DMatrix<f64> {
    let g = gamma.as_slice();
    let (n, d) = points.shape();
    let size = n * (d + 1);
    let mut m = DMatrix::zeros(size, size);
    let mut rt = vec![0.0; d];
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..d {
                rt[i] = g[i] * (points[(a, i)] - points[(b, i)]);
                s += rt[i] * rt[i];
            }
            let rad = spec.radial(s);
            let rk2 = rt[k] * rt[k];
            m[(a, b)] = 2.0 * rad.d1 * rk2;
            for j in 0..d {
                let dj = if j == k { 1.0 } else { 0.0 };
                let top = -4.0 * rad.d2 * rk2 * rt[j] - 2.0 * rad.d1 * dj * rt[j];
                m[(a, n * (j + 1) + b)] = top;
                m[(n * (j + 1) + a, b)] = -top;
                for i in 0..d {
                    let di = if i == k { 1.0 } else { 0.0 };
                    let dij = if i == j { 1.0 } else { 0.0 };
                    m[(n * (i + 1) + a, n * (j + 1) + b)] = -8.0 * rad.d3 * rk2 * rt[i] * rt[j]
                        - 4.0 * rad.d2 * (di + dj) * rt[i] * rt[j]
                        - 4.0 * rad.d2 * rk2 * dij;
                }
            }
        }
    }
    m
}

/// Dimensionless cross-covariance between the training observations and the
/// value at `x`, and its Jacobian with respect to `x`.
///
/// Entries are `[k(x_a, x); ∂k(x_a, x)/∂x̃_{a,i}]`; multiply by the
/// preconditioner pattern to recover the dimensional vector.
pub(crate) fn cross_correlation(
    spec: &KernelSpec,
    gamma: &LengthScales,
    points: &DMatrix<f64>,
    x: &[f64],
    with_jacobian: bool,
) -> (DVector<f64>, Option<DMatrix<f64>>) {
    let g = gamma.as_slice();
    let (n, d) = points.shape();
    let size = n * (d + 1);
    let mut c = DVector::zeros(size);
    let mut jac = with_jacobian.then(|| DMatrix::zeros(size, d));
    let mut rt = vec![0.0; d];
    for a in 0..n {
        let mut s = 0.0;
        for i in 0..d {
            rt[i] = g[i] * (points[(a, i)] - x[i]);
            s += rt[i] * rt[i];
        }
        let rad = spec.radial(s);
        c[a] = rad.v;
        for i in 0..d {
            c[n * (i + 1) + a] = 2.0 * rad.d1 * rt[i];
        }
        if let Some(jac) = jac.as_mut() {
            // ∂r̃_j/∂x_j = −γ_j
            for j in 0..d {
                jac[(a, j)] = -g[j] * 2.0 * rad.d1 * rt[j];
                for i in 0..d {
                    let dij = if i == j { 2.0 * rad.d1 } else { 0.0 };
                    jac[(n * (i + 1) + a, j)] = -g[j] * (4.0 * rad.d2 * rt[i] * rt[j] + dij);
                }
            }
        }
    }
    (c, jac)
}
