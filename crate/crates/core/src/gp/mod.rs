//! Gradient-enhanced GP models: likelihood, fitting and prediction.

mod fit;
mod likelihood;
mod predict;
mod sweep;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::conditioning::{Method, PreconditionedFactor};
use crate::error::Result;
use crate::kernels::{KernelSpec, LengthScales};
use crate::problems::EvaluationSet;

pub use crate::conditioning::{nugget_rescale, v_min_set};
pub use fit::{fit, lnl_grid, FitReport, OptConfig};
pub use likelihood::{
    log_likelihood_gradfree, log_likelihood_gradient, log_likelihood_profile, log_likelihood_profile_raw, Profile,
};
pub use predict::{predict_mean, predict_var, Prediction};
pub use sweep::{argmax_cell, log_grid, sweep_2d, sweep_cell, SweepCell, SweepSetup};

use likelihood::{check_dims, Frame, Objective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub gamma: LengthScales,
    pub beta: f64,
    pub sigma2: f64,
    pub eta: f64,
}

/// A trained surrogate. Points are stored in the (possibly rescaled) frame
/// the model was fitted in; queries are given in original coordinates.
#[derive(Debug, Clone)]
pub struct GpModel {
    data: EvaluationSet,
    spec: KernelSpec,
    hyper: Hyperparameters,
    factor: PreconditionedFactor,
    method: Method,
    lnl: f64,
    alpha: DVector<f64>,
}

impl GpModel {
    /// Model at fixed length scales and nugget. The precondition method
    /// factors `K̃ + ηI`; the other two factor `K∇ + ηI`.
    pub fn build(es: &EvaluationSet, spec: &KernelSpec, method: Method, gamma: &LengthScales, eta: f64) -> Result<Self> {
        check_dims(es, gamma)?;
        let frame = if method == Method::Precondition { Frame::Preconditioned } else { Frame::Raw };
        let ev = Objective::new(es, *spec, eta, frame).evaluate(gamma)?;
        Ok(Self {
            data: es.clone(),
            spec: *spec,
            hyper: Hyperparameters { gamma: gamma.clone(), beta: ev.profile.beta, sigma2: ev.profile.sigma2, eta },
            factor: ev.factor,
            method,
            lnl: ev.profile.lnl,
            alpha: ev.alpha,
        })
    }

    pub fn data(&self) -> &EvaluationSet {
        &self.data
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn factor(&self) -> &PreconditionedFactor {
        &self.factor
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn lnl(&self) -> f64 {
        self.lnl
    }

    /// Scale between original and model coordinates.
    pub fn scale(&self) -> f64 {
        self.data.scale()
    }

    /// Length scales expressed for original coordinates.
    pub fn gamma_original(&self) -> Vec<f64> {
        self.hyper.gamma.as_slice().iter().map(|g| g * self.scale()).collect()
    }

    /// κ of the factored matrix.
    pub fn kappa(&self) -> f64 {
        self.factor.condition_number()
    }
}
