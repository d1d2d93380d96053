//! Gradient-enhanced Bayesian optimization with a hypersphere trust region.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conditioning::{ConditioningPolicy, Method, NuggetRule};
use crate::error::{Error, Result};
use crate::gp::{fit, GpModel, OptConfig};
use crate::kernels::KernelSpec;
use crate::optim::{minimize_projected, project_ball, project_box, MinimizeOptions};
use crate::problems::{latin_hypercube, EvaluationSet, Problem};

/// Exploration weight ω of `h = μ + ωσ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub omega: f64,
}

impl AcquisitionSpec {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be finite and >= 0, got {omega}")));
        }
        Ok(Self { omega })
    }
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self { omega: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRegion {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TrustRegion {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("trust-region radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, x: &[f64], rel_tol: f64) -> bool {
        let dist = x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        dist <= self.radius * (1.0 + rel_tol)
    }
}

/// `h(x) = μ_f(x) + ω σ_f(x)`, to be minimized.
pub fn acquisition(model: &GpModel, x: &[f64], omega: f64) -> f64 {
    let p = model.predict(x);
    if omega == 0.0 {
        p.mean
    } else {
        p.mean + omega * p.var.sqrt()
    }
}

/// `h` and its gradient.
pub fn acquisition_with_gradient(model: &GpModel, x: &[f64], omega: f64) -> (f64, Vec<f64>) {
    let p = model.predict_with_gradient(x);
    let mut grad = p.mean_grad.unwrap_or_default();
    if omega == 0.0 {
        return (p.mean, grad);
    }
    let sigma = p.var.sqrt();
    if sigma > 0.0 {
        for (g, vg) in grad.iter_mut().zip(p.var_grad.unwrap_or_default()) {
            *g += omega * vg / (2.0 * sigma);
        }
    }
    (p.mean + omega * sigma, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    /// Random starts inside the ball in addition to the center.
    pub random_starts: usize,
    pub max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { random_starts: 4, max_iter: 200 }
    }
}

/// Uniform sample from the ball of radius `r` around `c`.
fn sample_ball(rng: &mut impl Rng, c: &[f64], r: f64) -> Vec<f64> {
    let dir: Vec<f64> = c.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let rad = r * rng.gen::<f64>().powf(1.0 / c.len() as f64);
    c.iter().zip(&dir).map(|(ci, di)| ci + rad * di / norm).collect()
}

/// Minimizes the acquisition inside the trust region (intersected with the
/// box `bounds`, which must contain the center). Never returns a point
/// worse than the center.
pub fn minimize_acquisition(
    model: &GpModel,
    tr: &TrustRegion,
    omega: f64,
    bounds: Option<(&[f64], &[f64])>,
    cfg: &InnerConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    // a coordinate clamp toward a box containing the center cannot leave the ball
    let project = |x: &mut [f64]| {
        project_ball(x, &tr.center, tr.radius);
        if let Some((lo, hi)) = bounds {
            project_box(x, lo, hi);
        }
    };
    let opts = MinimizeOptions { max_iter: cfg.max_iter, grad_tol: 0.0, f_tol: 0.0, max_step: tr.radius };
    let h_center = acquisition(model, &tr.center, omega);
    let mut best = (tr.center.clone(), h_center);
    let mut starts = vec![tr.center.clone()];
    starts.extend((0..cfg.random_starts).map(|_| sample_ball(rng, &tr.center, tr.radius)));
    for s in starts {
        let f = |x: &[f64]| {
            let (h, g) = acquisition_with_gradient(model, x, omega);
            h.is_finite().then_some((h, g))
        };
        if let Some(r) = minimize_projected(f, project, &s, &opts) {
            if r.f < best.1 {
                best = (r.x, r.f);
            }
        }
    }
    best.0
}

/// Settings of a single optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoConfig {
    pub problem: Problem,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: Method,
    pub kernel: KernelSpec,
    pub cond_max: f64,
    /// Defaults to the kernel's rule when absent.
    pub nugget_rule: Option<NuggetRule>,
    /// Total number of objective evaluations, including the initial design.
    pub budget: usize,
    /// Size of the initial Latin-hypercube design; `d + 1` when absent.
    pub initial_points: Option<usize>,
    pub seed: u64,
    pub omega: f64,
    pub fit: OptConfig,
    pub inner: InnerConfig,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Rosenbrock,
            dim: 2,
            lower: vec![-2.0; 2],
            upper: vec![2.0; 2],
            method: Method::Precondition,
            kernel: KernelSpec::gaussian(),
            cond_max: 1e10,
            nugget_rule: None,
            budget: 60,
            initial_points: None,
            seed: 0,
            omega: 0.0,
            fit: OptConfig { lhs_starts: 2, ..OptConfig::default() },
            inner: InnerConfig::default(),
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(Error::InvalidDimension(format!(
                "dim {} with bounds of length {} and {}",
                self.dim,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.problem == Problem::Rosenbrock && self.dim < 2 {
            return Err(Error::InvalidDimension("rosenbrock needs dim >= 2".into()));
        }
        if self.problem == Problem::Sin1d && self.dim != 1 {
            return Err(Error::InvalidDimension("sin1d is one-dimensional".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidInput("bounds need lower < upper, finite".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidInput("budget must be at least 1".into()));
        }
        if self.initial_points == Some(0) {
            return Err(Error::InvalidInput("initial design needs at least one point".into()));
        }
        AcquisitionSpec::new(self.omega)?;
        self.policy()?;
        KernelSpec::new(self.kernel.family, self.kernel.alpha)?;
        Ok(())
    }

    pub fn policy(&self) -> Result<ConditioningPolicy> {
        let rule = self.nugget_rule.unwrap_or_else(|| NuggetRule::default_for(&self.kernel));
        ConditioningPolicy::new(self.method, self.cond_max, rule)
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoRecord {
    pub iter: usize,
    pub x: Vec<f64>,
    pub f: f64,
    /// `‖∇f(x)‖₂`
    pub opt_norm: f64,
    /// Running minimum of `opt_norm`.
    pub best_opt: f64,
    /// Log-likelihood of the model that proposed `x` (NaN for the initial design).
    pub lnl: f64,
    /// Condition number of that model's factored matrix (NaN for the initial design).
    pub kappa: f64,
    pub radius: f64,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoTrace {
    pub method: Method,
    pub records: Vec<BoRecord>,
}

impl BoTrace {
    pub fn best_optimality(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.best_opt)
    }

    /// Number of evaluations until `best_opt < tol`, if ever.
    pub fn evaluations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().position(|r| r.best_opt < tol).map(|i| i + 1)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the optimization loop: initial design, then fit, acquisition
/// minimization in the trust region and evaluation until the budget is spent.
pub fn bo_run(cfg: &BoConfig) -> Result<BoTrace> {
    cfg.validate()?;
    let d = cfg.dim;
    let policy = cfg.policy()?;
    let n0 = cfg.initial_points.unwrap_or(d + 1).min(cfg.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let design = latin_hypercube(n0, &cfg.lower, &cfg.upper, cfg.seed)?;
    let es0 = EvaluationSet::from_problem(cfg.problem, design)?;
    let mut es = es0.clone();

    let diag = norm(&cfg.lower.iter().zip(&cfg.upper).map(|(l, u)| u - l).collect::<Vec<_>>());
    let mut radius = 0.1 * diag;
    let mut records = Vec::with_capacity(cfg.budget);
    let mut best_opt = f64::INFINITY;
    let mut best_f = f64::INFINITY;
    let mut center = vec![0.0; d];
    for i in 0..n0 {
        let x: Vec<f64> = es.points().row(i).iter().copied().collect();
        let g: Vec<f64> = es.gradients().row(i).iter().copied().collect();
        let f = es.values()[i];
        let opt = norm(&g);
        best_opt = best_opt.min(opt);
        if f < best_f {
            best_f = f;
            center = x.clone();
        }
        records.push(BoRecord { iter: i, x, f, opt_norm: opt, best_opt, lnl: f64::NAN, kappa: f64::NAN, radius, fit_error: None });
    }

    let mut model: Option<GpModel> = None;
    let mut fit_cfg = cfg.fit.clone();
    while records.len() < cfg.budget {
        let iter = records.len();
        fit_cfg.seed = cfg.fit.seed.wrapping_add(iter as u64);
        let mut fit_error = None;
        match fit(&es, &cfg.kernel, &policy, &fit_cfg) {
            Ok((m, _)) => {
                fit_cfg.warm_start = Some(m.gamma_original());
                model = Some(m);
            }
            Err(e) => fit_error = Some(e.to_string()),
        }
        let tr = TrustRegion::new(center.clone(), radius)?;
        let x_next = match &model {
            Some(m) => minimize_acquisition(m, &tr, cfg.omega, Some((&cfg.lower, &cfg.upper)), &cfg.inner, &mut rng),
            None => {
                let mut x = sample_ball(&mut rng, &tr.center, tr.radius);
                project_box(&mut x, &cfg.lower, &cfg.upper);
                x
            }
        };
        let (f, g) = cfg.problem.evaluate(&x_next)?;
        es.push(&x_next, f, &g)?;
        let opt = norm(&g);
        best_opt = best_opt.min(opt);
        let (lnl, kappa) = model.as_ref().map_or((f64::NAN, f64::NAN), |m| (m.lnl(), m.kappa()));
        records.push(BoRecord { iter, x: x_next.clone(), f, opt_norm: opt, best_opt, lnl, kappa, radius, fit_error });
        if f < best_f {
            best_f = f;
            center = x_next;
            radius = (1.5 * radius).min(diag);
        } else {
            radius = (0.5 * radius).max(1e-12);
        }
    }
    Ok(BoTrace { method: cfg.method, records })
}

/// Rows of the evaluated points, in evaluation order.
pub fn trace_points(trace: &BoTrace) -> DMatrix<f64> {
    let d = trace.records.first().map_or(0, |r| r.x.len());
    DMatrix::from_fn(trace.records.len(), d, |i, j| trace.records[i].x[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LengthScales;

    fn quadratic_model(center: [f64; 2], eta: f64) -> GpModel {
        // f = (x − a)² + 2(y − b)², six well-spread points
        let pts = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.2, 0.2, 0.7]);
        let mut values = nalgebra::DVector::zeros(6);
        let mut grads = DMatrix::zeros(6, 2);
        for i in 0..6 {
            let (x, y) = (pts[(i, 0)] - center[0], pts[(i, 1)] - center[1]);
            values[i] = x * x + 2.0 * y * y;
            grads[(i, 0)] = 2.0 * x;
            grads[(i, 1)] = 4.0 * y;
        }
        let es = EvaluationSet::new(pts, values, grads).unwrap();
        GpModel::build(&es, &KernelSpec::gaussian(), Method::Precondition, &LengthScales::new(vec![0.3, 0.3]).unwrap(), eta).unwrap()
    }

    #[test]
    fn omega_zero_is_mean() {
        let model = quadratic_model([0.4, 0.6], 1e-10);
        for x in [[0.1, 0.2], [0.9, -0.3]] {
            assert_eq!(acquisition(&model, &x, 0.0), model.predict(&x).mean);
        }
    }

    #[test]
    fn far_field_acquisition() {
        let model = quadratic_model([0.4, 0.6], 1e-10);
        let h = model.hyperparameters();
        let a = acquisition(&model, &[400.0, 400.0], 1.0);
        assert!((a - (h.beta + h.sigma2.sqrt())).abs() < 1e-9 * (h.beta.abs() + h.sigma2.sqrt()));
    }

    #[test]
    fn acquisition_gradient_matches_finite_differences() {
        let model = quadratic_model([0.4, 0.6], 1e-8);
        for omega in [0.0, 0.5, 2.0] {
            let x = [0.33, 0.41];
            let (_, g) = acquisition_with_gradient(&model, &x, omega);
            let h = 1e-6;
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (acquisition(&model, &xp, omega) - acquisition(&model, &xm, omega)) / (2.0 * h);
                assert!((g[j] - fd).abs() < 1e-4 * g[j].abs().max(1.0), "omega={omega}: {} vs {fd}", g[j]);
            }
        }
    }

    #[test]
    fn interior_minimum_found() {
        let model = quadratic_model([0.4, 0.6], 1e-12);
        let tr = TrustRegion::new(vec![0.5, 0.5], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = minimize_acquisition(&model, &tr, 0.0, None, &InnerConfig::default(), &mut rng);
        // the surrogate minimum, located independently by Newton on ∇μ = 0
        let (gx, gy) = newton_stationary_point(&model, [0.4, 0.6]);
        assert!((x[0] - gx).abs() < 1e-6 && (x[1] - gy).abs() < 1e-6, "{x:?} vs ({gx}, {gy})");
        assert!((x[0] - 0.4).abs() < 1e-2 && (x[1] - 0.6).abs() < 1e-2, "{x:?}");
    }

    fn newton_stationary_point(model: &GpModel, x0: [f64; 2]) -> (f64, f64) {
        let grad = |x: [f64; 2]| model.predict_with_gradient(&x).mean_grad.unwrap();
        let mut x = x0;
        for _ in 0..30 {
            let g = grad(x);
            let h = 1e-5;
            let mut hess = [[0.0; 2]; 2];
            for j in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[j] += h;
                xm[j] -= h;
                let (gp, gm) = (grad(xp), grad(xm));
                for i in 0..2 {
                    hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            x[0] -= (hess[1][1] * g[0] - hess[0][1] * g[1]) / det;
            x[1] -= (hess[0][0] * g[1] - hess[1][0] * g[0]) / det;
        }
        (x[0], x[1])
    }

    #[test]
    fn boundary_minimum_when_outside() {
        let model = quadratic_model([0.4, 0.6], 1e-12);
        let tr = TrustRegion::new(vec![0.9, 0.1], 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = minimize_acquisition(&model, &tr, 0.0, None, &InnerConfig::default(), &mut rng);
        let dist = (x[0] - 0.9).hypot(x[1] - 0.1);
        assert!((dist - 0.2).abs() < 1e-8, "{dist}");
    }

    #[test]
    fn never_leaves_ball_and_never_worse_than_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..100 {
            let a = [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)];
            let model = quadratic_model(a, 1e-10);
            let tr = TrustRegion::new(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)], 10f64.powf(rng.gen_range(-4.0..0.0))).unwrap();
            let omega = if k % 2 == 0 { 0.0 } else { 1.0 };
            let cfg = InnerConfig { random_starts: 2, max_iter: 50 };
            let x = minimize_acquisition(&model, &tr, omega, Some((&[0.0, 0.0], &[1.0, 1.0])), &cfg, &mut rng);
            assert!(tr.contains(&x, 1e-12));
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(acquisition(&model, &x, omega) <= acquisition(&model, &tr.center, omega));
        }
    }

    #[test]
    fn quadratic_converges_quickly() {
        // exact-data quadratic: the surrogate minimizer lands on the true minimum
        let mut model = quadratic_model([0.4, 0.6], 1e-14);
        let mut tr = TrustRegion::new(vec![0.5, 0.2], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hit = false;
        for _ in 0..3 {
            let x = minimize_acquisition(&model, &tr, 0.0, None, &InnerConfig::default(), &mut rng);
            if (x[0] - 0.4).hypot(x[1] - 0.6) < 1e-6 {
                hit = true;
                break;
            }
            let mut es = model.data().clone();
            let (dx, dy) = (x[0] - 0.4, x[1] - 0.6);
            es.push(&x, dx * dx + 2.0 * dy * dy, &[2.0 * dx, 4.0 * dy]).unwrap();
            let spec = KernelSpec::gaussian();
            let policy = ConditioningPolicy::for_kernel(Method::Precondition, &spec).with_nugget_override(1e-14).unwrap();
            model = fit(&es, &spec, &policy, &OptConfig::default()).unwrap().0;
            tr.center = x;
        }
        assert!(hit);
    }

    #[test]
    fn short_run_trace_invariants() {
        let cfg = BoConfig { budget: 12, ..BoConfig::default() };
        let trace = bo_run(&cfg).unwrap();
        assert_eq!(trace.records.len(), 12);
        for w in trace.records.windows(2) {
            assert!(w[1].best_opt <= w[0].best_opt);
        }
        for r in &trace.records {
            assert!(r.x.iter().zip(&cfg.lower).zip(&cfg.upper).all(|((x, l), u)| x >= l && x <= u));
            assert!(r.fit_error.is_none());
        }
        assert!(trace.records[3..].iter().all(|r| r.kappa <= 1e10));
        // NaN fields rule out PartialEq for the initial design records
        assert_eq!(format!("{:?}", bo_run(&cfg).unwrap()), format!("{trace:?}"));
    }

    #[test]
    fn config_validation() {
        assert!(BoConfig { budget: 0, ..BoConfig::default() }.validate().is_err());
        assert!(BoConfig { dim: 3, ..BoConfig::default() }.validate().is_err());
        assert!(BoConfig { omega: -1.0, ..BoConfig::default() }.validate().is_err());
        assert!(TrustRegion::new(vec![0.0], 0.0).is_err());
    }
}
