//! Posterior mean and variance of a fitted model.

use nalgebra::{DMatrix, DVector};

use super::GpModel;
use crate::conditioning::preconditioner;
use crate::kernels::cross_correlation;
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Clamped at zero.
    pub var: f64,
    /// Gradients with respect to the query in original coordinates.
    pub mean_grad: Option<Vec<f64>>,
    pub var_grad: Option<Vec<f64>>,
}

impl GpModel {
    /// `q = Pf⁻¹ P c̃`: the cross covariance in the factored frame.
    fn cross(&self, x: &[f64], with_jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        assert_eq!(x.len(), self.data().dim(), "query dimension mismatch");
        let tau = self.scale();
        let xs: Vec<f64> = x.iter().map(|v| v * tau).collect();
        let gamma = &self.hyperparameters().gamma;
        let (c, jac) = cross_correlation(self.spec(), gamma, self.data().points(), &xs, with_jacobian);
        let p = preconditioner(gamma, self.data().n_points());
        let pf = &self.factor().precond;
        let scale = p.diagonal().component_div(pf.diagonal());
        let q = c.component_mul(&scale);
        let jq = jac.map(|mut j| {
            for (mut row, s) in j.row_iter_mut().zip(scale.iter()) {
                row *= *s * tau;
            }
            j
        });
        (q, jq)
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        self.predict_impl(x, false)
    }

    /// Prediction including gradients of mean and variance.
    pub fn predict_with_gradient(&self, x: &[f64]) -> Prediction {
        self.predict_impl(x, true)
    }

    fn predict_impl(&self, x: &[f64], with_gradient: bool) -> Prediction {
        let (q, jq) = self.cross(x, with_gradient);
        let h = self.hyperparameters();
        let v = linalg::solve_lower(&self.factor().l_tilde, &q);
        let mean = h.beta + q.dot(&self.alpha);
        let var = (h.sigma2 * (1.0 - v.dot(&v))).max(0.0);
        let (mean_grad, var_grad) = match jq {
            Some(j) => {
                let mg = j.tr_mul(&self.alpha);
                let mq = linalg::solve_upper_transposed(&self.factor().l_tilde, &v);
                let vg = j.tr_mul(&mq) * (-2.0 * h.sigma2);
                let vg = if var > 0.0 { vg } else { DVector::zeros(vg.len()) };
                (Some(mg.iter().copied().collect()), Some(vg.iter().copied().collect()))
            }
            None => (None, None),
        };
        Prediction { mean, var, mean_grad, var_grad }
    }
}

pub fn predict_mean(model: &GpModel, x: &[f64]) -> f64 {
    model.predict(x).mean
}

pub fn predict_var(model: &GpModel, x: &[f64]) -> f64 {
    model.predict(x).var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::Method;
    use crate::kernels::{assemble_grad, KernelSpec, LengthScales};
    use crate::problems::{rescale_isotropic, sin_demo_points, stack_observations, EvaluationSet, Problem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sin_model(eta: f64, method: Method) -> GpModel {
        let es = EvaluationSet::from_problem(Problem::Sin1d, sin_demo_points()).unwrap();
        GpModel::build(&es, &KernelSpec::gaussian(), method, &LengthScales::new(vec![1.769]).unwrap(), eta).unwrap()
    }

    #[test]
    fn interpolates_training_data() {
        let model = sin_model(1e-14, Method::Precondition);
        for &x in &[3.5, 4.5, 5.5, 6.5] {
            let (f, g) = crate::problems::sin_demo_1d(x);
            let p = model.predict_with_gradient(&[x]);
            assert!((p.mean - f).abs() < 1e-6, "{x}: {} vs {f}", p.mean);
            let h = 1e-5;
            let fd = (predict_mean(&model, &[x + h]) - predict_mean(&model, &[x - h])) / (2.0 * h);
            assert!((fd - g).abs() < 1e-4, "{x}: {fd} vs {g}");
            assert!((p.mean_grad.unwrap()[0] - g).abs() < 1e-6);
            assert!(p.var < 1e-8);
        }
    }

    #[test]
    fn far_field_reverts_to_prior() {
        let model = sin_model(1e-9, Method::Precondition);
        let p = model.predict(&[50.0]);
        let h = model.hyperparameters();
        assert!((p.mean - h.beta).abs() <= 1e-9 * h.beta.abs());
        assert!((p.var - h.sigma2).abs() <= 1e-9 * h.sigma2);
    }

    #[test]
    fn variance_nonnegative() {
        let model = sin_model(1e-14, Method::Precondition);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..1000 {
            assert!(predict_var(&model, &[rng.gen_range(0.0..10.0)]) >= 0.0);
        }
    }

    fn random_model(rng: &mut ChaCha8Rng, spec: &KernelSpec, method: Method) -> GpModel {
        let d = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=5);
        let pts = DMatrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0));
        let problem = if d == 1 { Problem::Sin1d } else { Problem::Rosenbrock };
        let es = EvaluationSet::from_problem(problem, pts).unwrap();
        let gamma = LengthScales::new((0..d).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap();
        GpModel::build(&es, spec, method, &gamma, 1e-6).unwrap()
    }

    #[test]
    fn factored_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for spec in [KernelSpec::gaussian(), KernelSpec::matern52(), KernelSpec::rational_quadratic(1.0).unwrap()] {
            for method in [Method::Precondition, Method::Baseline] {
                for _ in 0..5 {
                    let model = random_model(&mut rng, &spec, method);
                    let es = model.data();
                    let gamma = &model.hyperparameters().gamma;
                    let (n, d) = (es.n_points(), es.dim());
                    let p = crate::conditioning::preconditioner(gamma, n);
                    let mut c = assemble_grad(&spec, gamma, es.points()).unwrap().into_matrix();
                    for i in 0..c.nrows() {
                        let w = if method == Method::Precondition { p.diagonal()[i].powi(2) } else { 1.0 };
                        c[(i, i)] += 1e-6 * w;
                    }
                    let inv = c.try_inverse().unwrap();
                    let st = stack_observations(es);
                    let h = model.hyperparameters();
                    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let (ct, _) = cross_correlation(&spec, gamma, es.points(), &x, false);
                    let k = ct.component_mul(p.diagonal());
                    let mean = h.beta + k.dot(&(&inv * (&st.values - &st.indicator * h.beta)));
                    let var = h.sigma2 * (1.0 - k.dot(&(&inv * &k)));
                    let pr = model.predict(&x);
                    assert!((pr.mean - mean).abs() < 1e-8 * mean.abs().max(1.0), "{spec:?} {method:?}");
                    assert!((pr.var - var.max(0.0)).abs() < 1e-8 * h.sigma2, "{spec:?} {method:?}");
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for spec in [KernelSpec::gaussian(), KernelSpec::matern52(), KernelSpec::rational_quadratic(3.0).unwrap()] {
            for method in [Method::Precondition, Method::Baseline] {
                let model = random_model(&mut rng, &spec, method);
                let d = model.data().dim();
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let p = model.predict_with_gradient(&x);
                let (mg, vg) = (p.mean_grad.unwrap(), p.var_grad.unwrap());
                let h = 1e-6;
                for j in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let (a, b) = (model.predict(&xp), model.predict(&xm));
                    let fdm = (a.mean - b.mean) / (2.0 * h);
                    let fdv = (a.var - b.var) / (2.0 * h);
                    assert!((mg[j] - fdm).abs() < 1e-5 * mg[j].abs().max(1.0), "{spec:?}");
                    assert!((vg[j] - fdv).abs() < 1e-5 * vg[j].abs().max(1.0), "{spec:?} {} {fdv}", vg[j]);
                }
            }
        }
    }

    #[test]
    fn rescaling_is_a_change_of_variables() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let pts = DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
        let es = EvaluationSet::from_problem(Problem::Rosenbrock, pts).unwrap();
        let gamma = vec![0.8, 1.7];
        let spec = KernelSpec::gaussian();
        let plain = GpModel::build(&es, &spec, Method::Precondition, &LengthScales::new(gamma.clone()).unwrap(), 1e-8).unwrap();
        let tau = 3.7;
        let scaled_es = rescale_isotropic(&es, tau).unwrap();
        let scaled_gamma = LengthScales::new(gamma.iter().map(|g| g / tau).collect()).unwrap();
        let scaled = GpModel::build(&scaled_es, &spec, Method::Precondition, &scaled_gamma, 1e-8).unwrap();
        for _ in 0..20 {
            let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let (a, b) = (plain.predict_with_gradient(&x), scaled.predict_with_gradient(&x));
            assert!((a.mean - b.mean).abs() < 1e-6 * a.mean.abs().max(1.0));
            assert!((a.var - b.var).abs() < 1e-6 * a.var.abs().max(1e-3));
            for j in 0..2 {
                let (ga, gb) = (a.mean_grad.as_ref().unwrap()[j], b.mean_grad.as_ref().unwrap()[j]);
                assert!((ga - gb).abs() < 1e-6 * ga.abs().max(1.0));
            }
        }
        // gradient observations shrink by τ, adding n·d·ln τ to the likelihood
        assert!((scaled.lnl() - plain.lnl() - 10.0 * tau.ln()).abs() < 1e-6);
    }
}
