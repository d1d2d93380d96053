//! Test functions with analytic gradients, fixed datasets, Latin-hypercube
//! sampling and the evaluation-data containers consumed by the GP.

mod dataset;
mod functions;
mod sampling;

pub use dataset::{read_dataset_csv, write_dataset_csv, parse_dataset_csv};
pub use functions::{rosenbrock, sin_demo_1d, Problem};
pub use sampling::{latin_hypercube, reference_design_2d, sin_demo_points};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Evaluation points with their function values and exact gradients.
///
/// `scale` records the isotropic factor τ already applied to the
/// parameter space (1 for raw data).
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    points: DMatrix<f64>,
    values: DVector<f64>,
    gradients: DMatrix<f64>,
    scale: f64,
}

impl EvaluationSet {
    pub fn new(points: DMatrix<f64>, values: DVector<f64>, gradients: DMatrix<f64>) -> Result<Self> {
        let (n, d) = points.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDimension(format!("evaluation set needs n_x, d >= 1, got {n}x{d}")));
        }
        if values.len() != n {
            return Err(Error::InvalidDimension(format!("{} values for {n} points", values.len())));
        }
        if gradients.shape() != (n, d) {
            return Err(Error::InvalidDimension(format!(
                "gradients are {:?}, expected ({n}, {d})",
                gradients.shape()
            )));
        }
        let finite = points.iter().chain(values.iter()).chain(gradients.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("evaluation set contains non-finite entries".into()));
        }
        Ok(Self { points, values, gradients, scale: 1.0 })
    }

    /// Evaluates `problem` at every row of `points`.
    pub fn from_problem(problem: Problem, points: DMatrix<f64>) -> Result<Self> {
        let (n, d) = points.shape();
        let mut values = DVector::zeros(n);
        let mut gradients = DMatrix::zeros(n, d);
        for i in 0..n {
            let x: Vec<f64> = points.row(i).iter().copied().collect();
            let (f, g) = problem.evaluate(&x)?;
            values[i] = f;
            for j in 0..d {
                gradients[(i, j)] = g[j];
            }
        }
        Self::new(points, values, gradients)
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn gradients(&self) -> &DMatrix<f64> {
        &self.gradients
    }

    /// Isotropic scale factor τ applied so far.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Appends one evaluation.
    pub fn push(&mut self, x: &[f64], value: f64, gradient: &[f64]) -> Result<()> {
        let d = self.dim();
        if x.len() != d || gradient.len() != d {
            return Err(Error::InvalidDimension(format!("expected {d}-dimensional point and gradient")));
        }
        if !value.is_finite() || x.iter().chain(gradient).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite evaluation".into()));
        }
        let n = self.n_points();
        let tau = self.scale;
        self.points = self.points.clone().insert_row(n, 0.0);
        self.gradients = self.gradients.clone().insert_row(n, 0.0);
        self.values = self.values.clone().insert_row(n, value);
        for j in 0..d {
            self.points[(n, j)] = tau * x[j];
            self.gradients[(n, j)] = gradient[j] / tau;
        }
        Ok(())
    }

    /// Smallest Euclidean distance between two distinct rows; `None` when
    /// there is only one point.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        min_pairwise_distance(&self.points)
    }
}

pub(crate) fn min_pairwise_distance(points: &DMatrix<f64>) -> Option<f64> {
    let n = points.nrows();
    let mut best: Option<f64> = None;
    for a in 0..n {
        for b in (a + 1)..n {
            let dist = (points.row(a) - points.row(b)).norm();
            best = Some(best.map_or(dist, |m: f64| m.min(dist)));
        }
    }
    best
}

/// Observation vector `[f; ∂f/∂x₁; …; ∂f/∂x_d]` and the matching mean
/// indicator `[1…1, 0…0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedObservations {
    pub values: DVector<f64>,
    pub indicator: DVector<f64>,
}

pub fn stack_observations(es: &EvaluationSet) -> StackedObservations {
    let (n, d) = (es.n_points(), es.dim());
    let mut values = DVector::zeros(n * (d + 1));
    let mut indicator = DVector::zeros(n * (d + 1));
    for a in 0..n {
        values[a] = es.values[a];
        indicator[a] = 1.0;
        for j in 0..d {
            values[n * (j + 1) + a] = es.gradients[(a, j)];
        }
    }
    StackedObservations { values, indicator }
}

/// Inverse of [`stack_observations`]: splits a stacked vector back into
/// values and an `n_x × d` gradient matrix.
pub fn unstack_observations(stacked: &DVector<f64>, n_x: usize, d: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if stacked.len() != n_x * (d + 1) {
        return Err(Error::InvalidDimension(format!(
            "stacked length {} does not match n_x(d+1) = {}",
            stacked.len(),
            n_x * (d + 1)
        )));
    }
    let values = DVector::from_fn(n_x, |a, _| stacked[a]);
    let gradients = DMatrix::from_fn(n_x, d, |a, j| stacked[n_x * (j + 1) + a]);
    Ok((values, gradients))
}

/// Isotropic change of variables `x ← τx`; gradients scale by `1/τ`.
pub fn rescale_isotropic(es: &EvaluationSet, tau: f64) -> Result<EvaluationSet> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("rescale factor must be positive, got {tau}")));
    }
    Ok(EvaluationSet {
        points: &es.points * tau,
        values: es.values.clone(),
        gradients: &es.gradients / tau,
        scale: es.scale * tau,
    })
}
