//! Projected quasi-Newton minimization for smooth objectives on simple
//! convex sets (boxes, balls).

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when the projected-gradient step is shorter than this.
    pub grad_tol: f64,
    /// Stop when the relative decrease of the objective falls below this.
    pub f_tol: f64,
    /// Largest initial trial step length.
    pub max_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-8, f_tol: 1e-12, max_step: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACK: usize = 50;

/// Minimizes `f` over the set defined by `project`, starting at `x0`.
///
/// `f` returns the value and gradient, or `None` where the objective is
/// undefined (infeasible); line searches backtrack away from such points.
/// Returns `None` if the projected start is itself undefined.
pub fn minimize_projected<F, P>(mut f: F, project: P, x0: &[f64], opts: &MinimizeOptions) -> Option<MinimizeResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    P: Fn(&mut [f64]),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    let mut evaluations = 1;
    let (mut fx, g) = f(&x)?;
    if !fx.is_finite() {
        return None;
    }
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut scaled = false;
    let mut converged = false;
    let mut iterations = 0;

    let projected_step = |x: &[f64], g: &DVector<f64>| {
        let mut y: Vec<f64> = x.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
        project(&mut y);
        y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };

    while iterations < opts.max_iter {
        if projected_step(&x, &g) < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = None;
        // quasi-Newton direction first, steepest descent as fallback
        for attempt in 0..2 {
            let mut p = if attempt == 0 { -(&h * &g) } else { -g.clone() };
            if p.dot(&g) >= 0.0 {
                if attempt == 0 {
                    continue;
                }
                break;
            }
            let norm = p.norm();
            if norm > opts.max_step {
                p *= opts.max_step / norm;
            }
            let mut t = 1.0;
            for _ in 0..MAX_BACKTRACK {
                let mut xt: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
                project(&mut xt);
                let moved: f64 = xt.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if moved == 0.0 {
                    break;
                }
                evaluations += 1;
                if let Some((ft, gt)) = f(&xt) {
                    let decrease: f64 = xt.iter().zip(&x).zip(g.iter()).map(|((a, b), gi)| (a - b) * gi).sum();
                    if ft.is_finite() && ft <= fx + ARMIJO_C * decrease.min(0.0) && ft <= fx {
                        accepted = Some((xt, ft, DVector::from_vec(gt)));
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                if attempt == 1 {
                    h = DMatrix::identity(n, n);
                    scaled = false;
                }
                break;
            }
        }
        let Some((xn, fn_, gn)) = accepted else {
            converged = true;
            break;
        };
        let s = DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if !scaled {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ, expanded
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let rel = (fx - fn_).abs() / (1.0 + fx.abs());
        x = xn;
        fx = fn_;
        g = gn;
        if rel < opts.f_tol {
            converged = true;
            break;
        }
    }
    Some(MinimizeResult { x, f: fx, grad: g.iter().copied().collect(), iterations, evaluations, converged })
}

/// Clamps each coordinate into `[lower_i, upper_i]`.
pub fn project_box(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Radial projection onto the closed ball of `radius` around `center`.
pub fn project_ball(x: &mut [f64], center: &[f64], radius: f64) {
    let dist = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
    if dist > radius {
        let s = radius / dist;
        for (v, c) in x.iter_mut().zip(center) {
            *v = c + (*v - c) * s;
        }
    }
}
