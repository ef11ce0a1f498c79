use super::*;
use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn params_iso(d: usize, l: f64, sv: f64, nv: f64) -> KernelParams<f64> {
    KernelParams::new(DVector::from_element(d, l), sv, nv)
}

fn random_inputs(n: usize, d: usize, rng: &mut StdRng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| f64::unit_uniform(rng))
}

#[test]
fn kernel_at_zero_distance_is_signal_variance() {
    let p = params_iso(3, 0.7, 2.5, 0.01);
    let x = [0.2, 0.4, 0.9];
    assert_eq!(matern52_ard(&x, &x, &p).unwrap(), 2.5);
}

#[test]
fn kernel_matches_hand_evaluated_closed_form() {
    // d=1, l=1, s^2=1, |x - x'| = 1, so r = 1:
    // (1 + sqrt5 + 5/3) exp(-sqrt5), evaluated independently.
    let expected = (1.0 + 5f64.sqrt() + 5.0 / 3.0) * (-(5f64.sqrt())).exp();
    assert_relative_eq!(expected, 0.52399, epsilon = 1e-5);
    let p = params_iso(1, 1.0, 1.0, 0.01);
    let k = matern52_ard(&[0.25], &[1.25], &p).unwrap();
    assert_relative_eq!(k, expected, epsilon = 1e-14);
}

#[test]
fn kernel_is_symmetric_in_arguments() {
    let p = KernelParams::new(DVector::from_vec(vec![0.3, 1.2]), 4.0, 0.02);
    let a = [0.1, 0.8];
    let b = [0.6, 0.2];
    assert_eq!(
        matern52_ard(&a, &b, &p).unwrap(),
        matern52_ard(&b, &a, &p).unwrap()
    );
}

#[test]
fn kernel_rejects_non_finite_input() {
    let p = params_iso(2, 0.5, 1.0, 0.01);
    let err = matern52_ard(&[f64::NAN, 0.0], &[0.1, 0.2], &p).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
    let err = matern52_ard(&[0.0, 0.0], &[f64::INFINITY, 0.2], &p).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn kernel_matrix_single_point() {
    let p = params_iso(2, 0.5, 3.0, 0.01);
    let x = DMatrix::from_row_slice(1, 2, &[0.4, 0.6]);
    let k = kernel_matrix(&x, &p).unwrap();
    assert_eq!(k.shape(), (1, 1));
    assert_eq!(k[(0, 0)], 3.0);
}

#[test]
fn kernel_matrix_duplicated_rows_are_identical() {
    let p = params_iso(2, 0.5, 1.0, 0.01);
    let x = DMatrix::from_row_slice(3, 2, &[0.1, 0.9, 0.5, 0.5, 0.1, 0.9]);
    let k = kernel_matrix(&x, &p).unwrap();
    for j in 0..3 {
        assert_eq!(k[(0, j)], k[(2, j)], "rows 0 and 2 differ at column {j}");
    }
}

#[test]
fn kernel_matrix_matches_elementwise_oracle() {
    let mut rng = StdRng::seed_from_u64(42);
    let x = random_inputs(5, 3, &mut rng);
    let p = KernelParams::new(DVector::from_vec(vec![0.2, 0.8, 1.5]), 2.0, 0.01);
    let k = kernel_matrix(&x, &p).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            let xj: Vec<f64> = x.row(j).iter().copied().collect();
            let expected = matern52_ard(&xi, &xj, &p).unwrap();
            assert_abs_diff_eq!(k[(i, j)], expected, epsilon = 1e-12);
        }
    }
}

#[test]
fn kernel_matrix_plus_noise_is_psd() {
    for seed in 0..10u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 2 + (seed as usize * 2) % 19;
        let x = random_inputs(n, 4, &mut rng);
        let p = KernelParams::new(
            DVector::from_fn(4, |_, _| 0.005 + 1.9 * f64::unit_uniform(&mut rng)),
            0.05 + 19.0 * f64::unit_uniform(&mut rng),
            0.0005 + 0.09 * f64::unit_uniform(&mut rng),
        );
        let mut k = kernel_matrix(&x, &p).unwrap();
        for i in 0..n {
            k[(i, i)] += p.noise_variance;
        }
        let eig = k.symmetric_eigenvalues();
        assert!(
            eig.min() >= -1e-10,
            "seed {seed}: min eigenvalue {}",
            eig.min()
        );
    }
}

#[test]
fn lml_single_point_closed_forms() {
    let v: f64 = 1.3 + 0.05; // s^2 + sigma^2
    let p = params_iso(1, 0.5, 1.3, 0.05);
    let x = DMatrix::from_row_slice(1, 1, &[0.5]);
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();

    let z0 = DVector::from_vec(vec![0.0]);
    let lml0 = log_marginal_likelihood(&x, &z0, &p).unwrap();
    assert_relative_eq!(lml0, -0.5 * v.ln() - half_log_2pi, epsilon = 1e-12);

    let z1 = DVector::from_vec(vec![1.0]);
    let lml1 = log_marginal_likelihood(&x, &z1, &p).unwrap();
    assert_relative_eq!(
        lml1,
        -0.5 / v - 0.5 * v.ln() - half_log_2pi,
        epsilon = 1e-12
    );
}

/// Central finite differences over the log-hyperparameters: the analytic
/// gradient has to agree to 1e-4 relative on every component.
fn check_gradient_against_fd(seed: u64, n: usize, d: usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let x = random_inputs(n, d, &mut rng);
    let z = DVector::from_fn(n, |_, _| 2.0 * f64::unit_uniform(&mut rng) - 1.0);
    let params = KernelParams::new(
        DVector::from_fn(d, |_, _| 0.1 + 0.9 * f64::unit_uniform(&mut rng)),
        0.3 + 2.0 * f64::unit_uniform(&mut rng),
        0.001 + 0.05 * f64::unit_uniform(&mut rng),
    );
    let (_, grad) = lml_with_gradient(&x, &z, &params).unwrap();
    let theta = params_to_log_vec(&params);
    let h = 1e-5;
    for j in 0..d + 2 {
        let mut tp = theta.clone();
        tp[j] += h;
        let mut tm = theta.clone();
        tm[j] -= h;
        let fp = log_marginal_likelihood(&x, &z, &params_from_log_vec(&tp)).unwrap();
        let fm = log_marginal_likelihood(&x, &z, &params_from_log_vec(&tm)).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        let denom = fd.abs().max(1e-6);
        assert!(
            (grad[j] - fd).abs() / denom < 1e-4,
            "seed {seed} component {j}: analytic {} vs fd {fd}",
            grad[j]
        );
    }
}

#[test]
fn lml_gradient_matches_finite_differences() {
    for seed in 0..8 {
        check_gradient_against_fd(seed, 10, 3);
    }
}

#[test]
fn fit_respects_hyperparameter_bounds() {
    for seed in 0..5u64 {
        let mut rng = StdRng::seed_from_u64(100 + seed);
        let x = random_inputs(12, 2, &mut rng);
        let y = DVector::from_fn(12, |i, _| (x[(i, 0)] * 9.0).sin() + x[(i, 1)]);
        let init = params_iso(2, 0.5, 1.0, 0.01);
        let model = fit_hyperparameters(&x, &y, &init, 30, &mut rng).unwrap();
        model.params().validate().unwrap();
    }
}

#[test]
fn fit_handles_constant_targets() {
    let mut rng = StdRng::seed_from_u64(7);
    let x = random_inputs(8, 2, &mut rng);
    let y = DVector::from_element(8, 3.25);
    let model = fit_hyperparameters(&x, &y, &params_iso(2, 0.5, 1.0, 0.01), 20, &mut rng).unwrap();
    assert_eq!(model.stats().std_dev, 1.0);
    assert_eq!(model.stats().mean, 3.25);
}

#[test]
fn fit_never_degrades_the_likelihood() {
    for seed in 0..5u64 {
        let mut rng = StdRng::seed_from_u64(300 + seed);
        let x = random_inputs(15, 2, &mut rng);
        let y = DVector::from_fn(15, |i, _| (7.0 * x[(i, 0)]).cos() * x[(i, 1)]);
        let init = params_iso(2, 1.9, 0.06, 0.09);

        let stats = StandardizationStats::from_values(&y);
        let z = y.map(|v| stats.standardize(v));
        let lml_init = log_marginal_likelihood(&x, &z, &init.clamped()).unwrap();

        let model = fit_hyperparameters(&x, &y, &init, 25, &mut rng).unwrap();
        assert!(
            model.lml() >= lml_init - 1e-9,
            "seed {seed}: {} < {lml_init}",
            model.lml()
        );
    }
}

#[test]
fn fit_with_zero_budget_returns_clamped_init() {
    let mut rng = StdRng::seed_from_u64(1);
    let x = random_inputs(6, 2, &mut rng);
    let y = DVector::from_fn(6, |i, _| x[(i, 0)]);
    let init = params_iso(2, 5.0, 30.0, 0.5); // all out of bounds
    let model = fit_hyperparameters(&x, &y, &init, 0, &mut rng).unwrap();
    assert_eq!(model.params().lengthscales[0], LENGTHSCALE_BOUNDS.1);
    assert_eq!(model.params().signal_variance, SIGNAL_VARIANCE_BOUNDS.1);
    assert_eq!(model.params().noise_variance, NOISE_VARIANCE_BOUNDS.1);
}

/// Simulation oracle: data drawn from a known GP should be fit with
/// lengthscales of the right order.
#[test]
fn fit_recovers_known_lengthscale() {
    let true_params = params_iso(2, 0.5, 1.0, 0.0005);
    let mut recovered = Vec::new();
    for seed in 0..20u64 {
        let mut rng = StdRng::seed_from_u64(1000 + seed);
        let x = random_inputs(50, 2, &mut rng);
        let mut k = kernel_matrix(&x, &true_params).unwrap();
        for i in 0..50 {
            k[(i, i)] += 1e-6;
        }
        let l = crate::linalg::CholeskyFactor::factor(&k).unwrap();
        let eta = DVector::from_fn(50, |_, _| f64::standard_normal(&mut rng));
        let y = l.l() * eta;
        let model = fit_hyperparameters(&x, &y, &KernelParams::centered(2), 60, &mut rng).unwrap();
        for &l in model.params().lengthscales.iter() {
            recovered.push(l);
        }
    }
    recovered.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = recovered[recovered.len() / 2];
    assert!(
        (0.25..=1.0).contains(&median),
        "median recovered lengthscale {median}"
    );
}

#[test]
fn posterior_nearly_interpolates_at_minimum_noise() {
    let x = DMatrix::from_fn(5, 1, |i, _| i as f64 / 4.0);
    let y = DVector::from_fn(5, |i, _| (x[(i, 0)] * 3.0).sin());
    let params = params_iso(1, 0.5, 1.0, NOISE_VARIANCE_BOUNDS.0);
    let model = GpModel::with_params(x.clone(), &y, params).unwrap();
    let post = model.posterior(&x).unwrap();
    for i in 0..5 {
        let residual = (post.mean[i] - model.standardized_targets()[i]).abs();
        assert!(residual <= 5e-3, "residual {residual} at point {i}");
        assert!(
            post.covariance[(i, i)] <= 2e-3,
            "variance {} at point {i}",
            post.covariance[(i, i)]
        );
    }
}

#[test]
fn posterior_reverts_to_prior_far_from_data() {
    let x = DMatrix::from_row_slice(2, 1, &[0.0, 0.02]);
    let y = DVector::from_vec(vec![1.0, 2.0]);
    let params = params_iso(1, 0.01, 1.0, 0.001);
    let model = GpModel::with_params(x, &y, params).unwrap();
    let far = DMatrix::from_row_slice(1, 1, &[1.0]);
    let post = model.posterior(&far).unwrap();
    assert_abs_diff_eq!(post.mean[0], model.params().mean_constant, epsilon = 1e-6);
    assert_abs_diff_eq!(
        post.covariance[(0, 0)],
        model.params().signal_variance,
        epsilon = 1e-6
    );
}

#[test]
fn posterior_single_point_matches_hand_derived_conditional() {
    let x = DMatrix::from_row_slice(1, 1, &[0.3]);
    let y = DVector::from_vec(vec![2.0]);
    let params = params_iso(1, 0.5, 1.4, 0.02);
    let model = GpModel::with_params(x, &y, params.clone()).unwrap();

    let cand = DMatrix::from_row_slice(1, 1, &[0.45]);
    let post = model.posterior(&cand).unwrap();

    // mean = m + k(x, x1) (s^2 + sigma^2)^{-1} (z1 - m)
    let k = matern52_ard(&[0.45], &[0.3], &params).unwrap();
    let z1 = model.standardized_targets()[0];
    let m = params.mean_constant;
    let expected_mean = m + k / (1.4 + 0.02) * (z1 - m);
    assert_relative_eq!(post.mean[0], expected_mean, epsilon = 1e-10);

    let expected_var = 1.4 - k * k / (1.4 + 0.02);
    assert_relative_eq!(post.covariance[(0, 0)], expected_var, epsilon = 1e-10);
}

#[test]
fn posterior_covariance_is_symmetric() {
    let mut rng = StdRng::seed_from_u64(9);
    let x = random_inputs(12, 2, &mut rng);
    let y = DVector::from_fn(12, |i, _| x[(i, 0)] - x[(i, 1)]);
    let model = GpModel::with_params(x, &y, params_iso(2, 0.4, 1.0, 0.01)).unwrap();
    let cands = random_inputs(7, 2, &mut rng);
    let post = model.posterior(&cands).unwrap();
    for i in 0..7 {
        for j in 0..7 {
            assert!((post.covariance[(i, j)] - post.covariance[(j, i)]).abs() < 1e-10);
        }
        assert!(post.covariance[(i, i)] >= 0.0);
    }
}

#[test]
fn chol_factor_reconstructs_training_covariance() {
    let mut rng = StdRng::seed_from_u64(21);
    let x = random_inputs(9, 2, &mut rng);
    let y = DVector::from_fn(9, |i, _| x[(i, 0)]);
    let params = params_iso(2, 0.6, 1.2, 0.03);
    let model = GpModel::with_params(x.clone(), &y, params.clone()).unwrap();
    let l = model.chol_factor();
    let reconstructed = l * l.transpose();
    let mut expected = kernel_matrix(&x, &params).unwrap();
    for i in 0..9 {
        expected[(i, i)] += params.noise_variance;
    }
    assert_relative_eq!(reconstructed, expected, epsilon = 1e-8);
}

#[test]
fn sample_joint_zero_covariance_returns_mean() {
    let post = Posterior {
        mean: DVector::from_vec(vec![1.0, -2.0, 0.5]),
        covariance: DMatrix::zeros(3, 3),
    };
    let mut rng = StdRng::seed_from_u64(3);
    let samples = sample_joint(&post, 4, &mut rng).unwrap();
    for i in 0..4 {
        for j in 0..3 {
            assert_eq!(samples[(i, j)], post.mean[j]);
        }
    }
}

#[test]
fn sample_joint_draws_differ() {
    let post = Posterior {
        mean: DVector::zeros(2),
        covariance: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]),
    };
    let mut rng = StdRng::seed_from_u64(4);
    let samples = sample_joint(&post, 2, &mut rng).unwrap();
    assert_ne!(samples.row(0), samples.row(1));
}

#[test]
fn sample_joint_empirical_covariance_matches() {
    let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.6, 0.2, 0.6, 1.0, -0.3, 0.2, -0.3, 1.5]);
    let mean = DVector::from_vec(vec![1.0, -1.0, 0.0]);
    let post = Posterior {
        mean: mean.clone(),
        covariance: cov.clone(),
    };
    let mut rng = StdRng::seed_from_u64(11);
    let n = 100_000;
    let samples = sample_joint(&post, n, &mut rng).unwrap();

    let emp_mean = DVector::from_fn(3, |j, _| samples.column(j).sum() / n as f64);
    let mut emp_cov = DMatrix::zeros(3, 3);
    for i in 0..n {
        for a in 0..3 {
            for b in 0..3 {
                emp_cov[(a, b)] +=
                    (samples[(i, a)] - emp_mean[a]) * (samples[(i, b)] - emp_mean[b]);
            }
        }
    }
    emp_cov /= (n - 1) as f64;

    let frob_err = (&emp_cov - &cov).norm() / cov.norm();
    assert!(frob_err < 0.02, "relative Frobenius error {frob_err}");
    // Mean within 3 standard errors per component.
    for j in 0..3 {
        let se = (cov[(j, j)] / n as f64).sqrt();
        assert!((emp_mean[j] - mean[j]).abs() < 3.0 * se);
    }
}

#[test]
fn generic_scalar_f32_round_trip() {
    let mut rng = StdRng::seed_from_u64(17);
    let x = DMatrix::<f32>::from_fn(10, 2, |_, _| f32::unit_uniform(&mut rng));
    let y = DVector::<f32>::from_fn(10, |i, _| x[(i, 0)] * 2.0 - x[(i, 1)]);
    let init = KernelParams::<f32>::centered(2);
    let model = fit_hyperparameters(&x, &y, &init, 10, &mut rng).unwrap();
    let post = model.posterior(&x).unwrap();
    assert!(post.mean.iter().all(|v| v.is_finite()));
}

proptest! {
    #[test]
    fn standardization_round_trips(values in proptest::collection::vec(-1e6f64..1e6, 2..40)) {
        let y = DVector::from_vec(values);
        let stats = StandardizationStats::from_values(&y);
        for &v in y.iter() {
            let back = stats.unstandardize(stats.standardize(v));
            // 1e-12 relative to the magnitudes flowing through the transform.
            let scale = v.abs().max(stats.mean.abs()).max(stats.std_dev).max(1.0);
            prop_assert!((back - v).abs() <= 1e-12 * scale);
        }
    }
}
