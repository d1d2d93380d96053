//! Hyperparameter fitting under the three conditioning methods.

use serde::{Deserialize, Serialize};

use super::likelihood::{check_dims, Frame, Objective};
use super::GpModel;
use crate::conditioning::{v_min_set, ConditioningPolicy, Method};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, LengthScales};
use crate::linalg;
use crate::optim::{minimize_projected, project_box, MinimizeOptions};
use crate::problems::{latin_hypercube, rescale_isotropic, EvaluationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    /// Latin-hypercube starts in log γ, in addition to γ = 1.
    pub lhs_starts: usize,
    pub max_iter: usize,
    /// Box for γ during the search.
    pub gamma_bounds: (f64, f64),
    /// Range the LHS starts are drawn from.
    pub start_range: (f64, f64),
    pub seed: u64,
    /// Extra start tried first, e.g. the previous optimum, in original coordinates.
    pub warm_start: Option<Vec<f64>>,
    /// Log-barrier weights for the κ constraint, applied in sequence.
    pub barrier_weights: Vec<f64>,
    /// Record κ at every likelihood evaluation (diagnostic only).
    pub audit_condition: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            lhs_starts: 4,
            max_iter: 200,
            gamma_bounds: (1e-6, 1e6),
            start_range: (1e-2, 1e2),
            seed: 0,
            warm_start: None,
            barrier_weights: vec![1e-2, 1e-5],
            audit_condition: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    pub iterations: usize,
    pub evaluations: usize,
    pub starts_tried: usize,
    pub feasible_starts: usize,
    pub best_lnl: f64,
    /// κ of the factored matrix is within 5% of κ_max (baseline, rescale).
    pub constraint_active: bool,
    pub kappa: f64,
    pub converged: bool,
    /// Eigen-solves spent on the κ constraint.
    pub constraint_evaluations: usize,
    pub max_audited_kappa: Option<f64>,
    /// Isotropic scale applied to the data by this fit.
    pub tau: f64,
}

struct StartOutcome {
    theta: Vec<f64>,
    lnl: f64,
    iterations: usize,
    converged: bool,
}

/// Maximizes the concentrated log-likelihood over γ.
///
/// * baseline: `K∇ + ηI` with the constraint `κ ≤ κ_max`
/// * rescale: data stretched so its minimum separation is `v_min_set`, then
///   as baseline with the rescale nugget
/// * precondition: `K̃ + ηI` with the Gershgorin (or trace) nugget, no constraint
pub fn fit(
    es: &EvaluationSet,
    spec: &KernelSpec,
    policy: &ConditioningPolicy,
    cfg: &OptConfig,
) -> Result<(GpModel, FitReport)> {
    let spec = KernelSpec::new(spec.family, spec.alpha)?;
    let (n, d) = (es.n_points(), es.dim());
    let (lo, hi) = cfg.gamma_bounds;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("bad gamma bounds ({lo}, {hi})")));
    }

    let (data, tau) = match policy.method {
        Method::Rescale => {
            let tau = match es.min_pairwise_distance() {
                Some(v) if v > 0.0 => v_min_set(d, n)? / v,
                _ => 1.0,
            };
            (rescale_isotropic(es, tau)?, tau)
        }
        _ => (es.clone(), 1.0),
    };
    let eta = policy.nugget(n, d)?;
    let frame = if policy.method == Method::Precondition { Frame::Preconditioned } else { Frame::Raw };
    let constrained = frame == Frame::Raw;
    let obj = Objective::new(&data, spec, eta, frame);
    let ln_kappa_max = policy.cond_max.ln();

    let lower = vec![lo.ln(); d];
    let upper = vec![hi.ln(); d];
    let project = |x: &mut [f64]| project_box(x, &lower, &upper);
    let opts = MinimizeOptions { max_iter: cfg.max_iter, grad_tol: 1e-6, f_tol: 1e-12, max_step: 2.0 };

    let mut constraint_evals = 0usize;
    let mut evaluations = 0usize;
    let mut max_audited: Option<f64> = None;

    // −lnL (plus barrier) and its gradient in θ = ln γ
    let mut objective = |theta: &[f64], mu: f64| -> Option<(f64, Vec<f64>)> {
        evaluations += 1;
        let gamma = LengthScales::new(theta.iter().map(|t| t.exp()).collect()).ok()?;
        let ev = obj.evaluate(&gamma).ok()?;
        if !ev.profile.lnl.is_finite() {
            return None;
        }
        if cfg.audit_condition {
            let k = ev.factor.condition_number();
            max_audited = Some(max_audited.map_or(k, |m: f64| m.max(k)));
        }
        let derivs = obj.matrix_derivatives(&gamma);
        let mut grad: Vec<f64> = obj.gradient_from(&derivs, &ev).iter().map(|g| -g).collect();
        let mut value = -ev.profile.lnl;
        if constrained {
            constraint_evals += 1;
            let m = &ev.factor.l_tilde * ev.factor.l_tilde.transpose();
            let (lmin, vmin, lmax, vmax) = linalg::extremal_eigenpairs(&m);
            if lmin <= 0.0 {
                return None;
            }
            let c = lmax.ln() - lmin.ln() - ln_kappa_max;
            if c >= 0.0 {
                return None;
            }
            value -= mu * (-c).ln();
            for (g, dm) in grad.iter_mut().zip(&derivs) {
                let dc = vmax.dot(&(dm * &vmax)) / lmax - vmin.dot(&(dm * &vmin)) / lmin;
                *g -= mu * dc / c;
            }
        }
        Some((value, grad))
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = &cfg.warm_start {
        if w.len() != d || w.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidInput("warm start must be d positive length scales".into()));
        }
        starts.push(w.iter().map(|g| (g / tau).ln()).collect());
    }
    starts.push(vec![0.0; d]);
    if cfg.lhs_starts > 0 {
        let (a, b) = cfg.start_range;
        let lhs = latin_hypercube(cfg.lhs_starts, &vec![a.ln(); d], &vec![b.ln(); d], cfg.seed)?;
        starts.extend(lhs.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()));
    }

    let mut outcomes: Vec<StartOutcome> = Vec::new();
    for start in &starts {
        let stages: Vec<f64> = if constrained { cfg.barrier_weights.clone() } else { vec![0.0] };
        let mut theta = start.clone();
        let mut iterations = 0;
        let mut converged = true;
        let mut ok = true;
        for mu in stages {
            match minimize_projected(|t| objective(t, mu), project, &theta, &opts) {
                Some(r) => {
                    theta = r.x;
                    iterations += r.iterations;
                    converged &= r.converged;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            if let Some((f, _)) = objective(&theta, 0.0) {
                outcomes.push(StartOutcome { theta, lnl: -f, iterations, converged });
            }
        }
    }

    let best = outcomes
        .iter()
        .max_by(|a, b| a.lnl.total_cmp(&b.lnl))
        .ok_or(Error::NoFeasibleStart)?;
    let gamma = LengthScales::new(best.theta.iter().map(|t| t.exp()).collect())?;
    let model = GpModel::build(&data, &spec, policy.method, &gamma, eta)?;
    let kappa = model.factor().condition_number();
    let report = FitReport {
        method: policy.method,
        iterations: outcomes.iter().map(|o| o.iterations).sum(),
        evaluations,
        starts_tried: starts.len(),
        feasible_starts: outcomes.len(),
        best_lnl: model.lnl(),
        constraint_active: constrained && kappa >= 0.95 * policy.cond_max,
        kappa,
        converged: best.converged,
        constraint_evaluations: constraint_evals,
        max_audited_kappa: max_audited,
        tau,
    };
    Ok((model, report))
}

/// Evaluates the objective used by [`fit`] on a grid of γ values, without
/// optimizing. Returns `None` where the factorization fails.
pub fn lnl_grid(
    es: &EvaluationSet,
    spec: &KernelSpec,
    method: Method,
    eta: f64,
    gammas: &[LengthScales],
) -> Result<Vec<Option<f64>>> {
    let frame = if method == Method::Precondition { Frame::Preconditioned } else { Frame::Raw };
    let obj = Objective::new(es, *spec, eta, frame);
    gammas
        .iter()
        .map(|g| {
            check_dims(es, g)?;
            Ok(obj.evaluate(g).ok().map(|ev| ev.profile.lnl))
        })
        .collect()
}
