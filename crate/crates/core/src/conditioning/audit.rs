//! Randomized validation of the preconditioned Gaussian nugget bound.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{condition_number_sym, modified_kernel, nugget_tilde_gershgorin, preconditioner, u_gershgorin};
use crate::error::Result;
use crate::kernels::{assemble_grad, KernelSpec, LengthScales};
use crate::linalg;

const TOL: f64 = 1e-12;

/// Outcome of a single random draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub n_x: usize,
    pub d: usize,
    /// `κ(K̃ + ηI) / κ_max`
    pub kappa_ratio: f64,
    /// `λ_max(K̃) / (1 + u_G)`
    pub lambda_ratio: f64,
    /// Largest absolute off-diagonal row sum over `u_G` (0 for a single point).
    pub row_sum_ratio: f64,
    pub max_abs_entry: f64,
    pub unit_diagonal: bool,
}

impl DrawOutcome {
    pub fn violated(&self) -> bool {
        !(self.kappa_ratio <= 1.0
            && self.lambda_ratio <= 1.0 + TOL
            && self.row_sum_ratio <= 1.0 + TOL
            && self.max_abs_entry <= 1.0 + TOL
            && self.unit_diagonal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub draws: usize,
    pub violations: usize,
    pub max_kappa_ratio: f64,
    pub max_lambda_ratio: f64,
    pub max_row_sum_ratio: f64,
    pub max_abs_entry: f64,
    pub seed: u64,
    pub cond_max: f64,
}

impl BoundReport {
    pub fn from_outcomes(outcomes: &[DrawOutcome], seed: u64, cond_max: f64) -> Self {
        let fold = |f: fn(&DrawOutcome) -> f64| outcomes.iter().map(f).fold(0.0, f64::max);
        Self {
            draws: outcomes.len(),
            violations: outcomes.iter().filter(|o| o.violated()).count(),
            max_kappa_ratio: fold(|o| o.kappa_ratio),
            max_lambda_ratio: fold(|o| o.lambda_ratio),
            max_row_sum_ratio: fold(|o| o.row_sum_ratio),
            max_abs_entry: fold(|o| o.max_abs_entry),
            seed,
            cond_max,
        }
    }
}

/// Evaluates draw number `index` of the stream selected by `seed`: up to 8
/// points in up to 5 dimensions, γ log-uniform on (1e−3, 1e3), with a
/// near-coincident pair in a quarter of the draws.
pub fn bound_draw(seed: u64, index: u64, cond_max: f64) -> Result<DrawOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n_x = rng.gen_range(1..=8);
    let d = rng.gen_range(1..=5);
    let mut pts = DMatrix::from_fn(n_x, d, |_, _| rng.gen_range(0.0..1.0));
    if n_x >= 2 && rng.gen_bool(0.25) {
        for j in 0..d {
            pts[(1, j)] = pts[(0, j)] + rng.gen_range(-1e-8..1e-8);
        }
    }
    let gamma = LengthScales::new((0..d).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect())?;

    let k = assemble_grad(&KernelSpec::gaussian(), &gamma, &pts)?;
    let kt = modified_kernel(&k, &preconditioner(&gamma, n_x))?;
    let eta = nugget_tilde_gershgorin(n_x, d, cond_max)?;
    let u = u_gershgorin(n_x, d);

    let mut shifted = kt.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += eta;
    }
    let kappa = condition_number_sym(&shifted)?;
    let lambda_max = *linalg::sym_eigenvalues(&kt).last().unwrap_or(&0.0);
    let max_row_sum = (0..kt.nrows())
        .map(|i| (0..kt.ncols()).filter(|&j| j != i).map(|j| kt[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(DrawOutcome {
        n_x,
        d,
        kappa_ratio: kappa / cond_max,
        lambda_ratio: lambda_max / (1.0 + u),
        row_sum_ratio: if u > 0.0 { max_row_sum / u } else { max_row_sum },
        max_abs_entry: kt.amax(),
        unit_diagonal: kt.diagonal().iter().all(|&v| v == 1.0),
    })
}

/// Runs `draws` random instances and summarizes the bound margins.
pub fn validate_bounds(draws: usize, seed: u64, cond_max: f64) -> Result<BoundReport> {
    let outcomes = (0..draws as u64).map(|i| bound_draw(seed, i, cond_max)).collect::<Result<Vec<_>>>()?;
    Ok(BoundReport::from_outcomes(&outcomes, seed, cond_max))
}
