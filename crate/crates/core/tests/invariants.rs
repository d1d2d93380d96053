use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use gradgp::conditioning::{
    condition_number_sym, modified_kernel, nugget_tilde_gershgorin, preconditioner, stable_cholesky,
    ConditioningPolicy, Method,
};
use gradgp::gp::{log_likelihood_gradient, log_likelihood_profile, log_likelihood_profile_raw, GpModel};
use gradgp::kernels::{assemble_grad, KernelSpec, LengthScales};
use gradgp::problems::{latin_hypercube, parse_dataset_csv, write_dataset_csv, EvaluationSet};

fn spec_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::gaussian()),
        Just(KernelSpec::matern52()),
        (0.3f64..5.0).prop_map(|a| KernelSpec::rational_quadratic(a).unwrap()),
    ]
}

/// `(points, γ)` with `n ∈ [1, 6]`, `d ∈ [1, 3]`, log-uniform γ.
fn design(max_log_gamma: f64) -> impl Strategy<Value = (DMatrix<f64>, LengthScales)> {
    (1usize..=6, 1usize..=3).prop_flat_map(move |(n, d)| {
        (
            prop::collection::vec(-1.0f64..1.0, n * d).prop_map(move |v| DMatrix::from_row_slice(n, d, &v)),
            prop::collection::vec(-max_log_gamma..max_log_gamma, d)
                .prop_map(|v| LengthScales::new(v.into_iter().map(|e| 10f64.powf(e)).collect()).unwrap()),
        )
    })
}

fn dataset(points: DMatrix<f64>, seed: u64) -> EvaluationSet {
    // smooth deterministic data so every draw is a valid dataset
    let (n, d) = points.shape();
    let s = seed as f64 * 0.1;
    let values = DVector::from_fn(n, |i, _| (0..d).map(|j| (points[(i, j)] + s).sin()).sum());
    let grads = DMatrix::from_fn(n, d, |i, j| (points[(i, j)] + s).cos());
    EvaluationSet::new(points, values, grads).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modified_kernel_is_a_correlation_matrix(spec in spec_strategy(), (x, g) in design(3.0)) {
        let k = assemble_grad(&spec, &g, &x).unwrap();
        let kt = modified_kernel(&k, &preconditioner(&g, x.nrows())).unwrap();
        for i in 0..kt.nrows() {
            prop_assert!((kt[(i, i)] - 1.0).abs() < 1e-12);
            for j in 0..kt.ncols() {
                prop_assert_eq!(kt[(i, j)], kt[(j, i)]);
                prop_assert!(kt[(i, j)].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn stable_cholesky_factors_the_regularized_matrix((x, g) in design(3.0)) {
        let spec = KernelSpec::gaussian();
        let policy = ConditioningPolicy::for_kernel(Method::Precondition, &spec);
        let factor = stable_cholesky(&x, &g, &spec, &policy).unwrap();
        let (n, d) = x.shape();
        let eta = nugget_tilde_gershgorin(n, d, 1e10).unwrap();
        prop_assert_eq!(factor.eta, eta);
        // L Lᵀ = K∇ + η P²
        let l = factor.l();
        let mut c = assemble_grad(&spec, &g, &x).unwrap().into_matrix();
        let p = factor.precond.diagonal();
        for i in 0..c.nrows() {
            c[(i, i)] += eta * p[i] * p[i];
        }
        let diff = (&l * l.transpose() - &c).abs().max();
        let scale = c.amax();
        prop_assert!(diff <= 1e-12 * scale, "{} vs {}", diff, scale);
        let lt = &factor.l_tilde;
        prop_assert!(condition_number_sym(&(lt * lt.transpose())).unwrap() <= 1e10 * (1.0 + 1e-6));
    }

    #[test]
    fn prediction_variance_is_nonnegative_and_far_field_reverts(
        spec in spec_strategy(),
        (x, g) in design(1.0),
        q in prop::collection::vec(-2.0f64..2.0, 3),
        seed in 0u64..100,
    ) {
        let d = x.ncols();
        let es = dataset(x, seed);
        let model = GpModel::build(&es, &spec, Method::Precondition, &g, 1e-8).unwrap();
        let p = model.predict(&q[..d]);
        prop_assert!(p.var >= 0.0);
        prop_assert!(p.var <= model.hyperparameters().sigma2 * (1.0 + 1e-9));
        let far: Vec<f64> = vec![1e6; d];
        let pf = model.predict(&far);
        let h = model.hyperparameters();
        prop_assert!((pf.mean - h.beta).abs() <= 1e-9 * h.beta.abs().max(1.0));
    }

    #[test]
    fn likelihood_gradient_matches_finite_differences(
        spec in spec_strategy(),
        (x, g) in design(0.5),
        seed in 0u64..100,
        preconditioned in any::<bool>(),
    ) {
        let es = dataset(x, seed);
        let eta = 1e-4;
        let lnl = |g: &LengthScales| {
            if preconditioned {
                log_likelihood_profile(&es, &spec, g, eta).unwrap().lnl
            } else {
                log_likelihood_profile_raw(&es, &spec, g, eta).unwrap().lnl
            }
        };
        let grad = log_likelihood_gradient(&es, &spec, &g, eta, preconditioned).unwrap();
        let h = 1e-6;
        for k in 0..g.dim() {
            let shift = |s: f64| {
                let mut v = g.as_slice().to_vec();
                v[k] *= (s * h).exp();
                LengthScales::new(v).unwrap()
            };
            let fd = (lnl(&shift(1.0)) - lnl(&shift(-1.0))) / (2.0 * h);
            prop_assert!((grad[k] - fd).abs() <= 1e-4 * fd.abs().max(1.0), "k={}: {} vs {}", k, grad[k], fd);
        }
    }

    #[test]
    fn dataset_csv_round_trips(n in 1usize..8, d in 1usize..4, seed in 0u64..1000) {
        let x = latin_hypercube(n, &vec![-3.0; d], &vec![3.0; d], seed).unwrap();
        let es = dataset(x, seed);
        let mut buf = Vec::new();
        write_dataset_csv(&es, &mut buf).unwrap();
        let back = parse_dataset_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.points(), es.points());
        prop_assert_eq!(back.values(), es.values());
        prop_assert_eq!(back.gradients(), es.gradients());
    }

    #[test]
    fn latin_hypercube_fills_every_stratum(n in 1usize..30, d in 1usize..5, seed in any::<u64>()) {
        let lo = vec![-1.0; d];
        let hi = vec![3.0; d];
        let x = latin_hypercube(n, &lo, &hi, seed).unwrap();
        for j in 0..d {
            let mut seen = vec![false; n];
            for i in 0..n {
                let v = x[(i, j)];
                prop_assert!((-1.0..=3.0).contains(&v));
                let s = (((v + 1.0) / 4.0 * n as f64) as usize).min(n - 1);
                prop_assert!(!seen[s]);
                seen[s] = true;
            }
        }
    }
}

#[test]
fn precondition_survives_near_coincident_points_where_baseline_fails() {
    // two points 1e-9 apart with a large length scale: K∇ + ηI is numerically singular
    let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1e-9, 0.0, 0.5, 0.5]);
    let es = dataset(x.clone(), 1);
    let g = LengthScales::new(vec![50.0, 50.0]).unwrap();
    let eta = nugget_tilde_gershgorin(3, 2, 1e10).unwrap();
    let pre = GpModel::build(&es, &KernelSpec::gaussian(), Method::Precondition, &g, eta).unwrap();
    assert!(pre.kappa() <= 1e10);
    let mut raw = assemble_grad(&KernelSpec::gaussian(), &g, &x).unwrap().into_matrix();
    for i in 0..raw.nrows() {
        raw[(i, i)] += eta;
    }
    assert!(condition_number_sym(&raw).unwrap() > 1e10);
}
