use approx::assert_relative_eq;
use nalgebra::DVector;

use aif::models::linear_gaussian::*;

fn score_point() -> Vec<f64> {
    let mut th = TRUE_PARAMS.to_vec();
    th[1] = -0.3;
    th[2] = 0.1;
    th
}

#[test]
fn toy_data_is_pinned() {
    let d = toy_dataset(42);
    assert_eq!(d.len(), 100);
    assert_eq!(d.observations[0], vec![-3.843958273333869, 5.844488144272437]);
    assert_eq!(d.observations[99], vec![-8.624574763220336, -1.0482272988581016]);
    let sum: f64 = d.observations.iter().flatten().sum();
    assert_relative_eq!(sum, 68.73469726303637, max_relative = 1e-12);
}

#[test]
fn loglik_at_truth_is_pinned() {
    let d = toy_dataset(42);
    assert_relative_eq!(toy_loglik(&TRUE_PARAMS, &d).unwrap(), -489.94812022112063, max_relative = 1e-12);
}

#[test]
fn fd_gradient_matches_richardson() {
    let d = toy_dataset(42);
    let th = score_point();
    let g = kalman_fd_gradient(&th, &d, &ESTIMATED, FD_STEP).unwrap();
    let coarse = kalman_fd_gradient(&th, &d, &ESTIMATED, 1e-3).unwrap();
    let fine = kalman_fd_gradient(&th, &d, &ESTIMATED, 5e-4).unwrap();
    for i in 0..2 {
        let rich = (4.0 * fine[i] - coarse[i]) / 3.0;
        assert_relative_eq!(g[i], rich, max_relative = 1e-6);
    }
    // frozen after the Richardson check above
    assert_relative_eq!(g[0], -72.08680471535445, max_relative = 1e-6);
    assert_relative_eq!(g[1], 248.956698561642, max_relative = 1e-6);
}

#[test]
fn mle_is_a_stationary_point() {
    let d = toy_dataset(42);
    let mle = kalman_mle(&TRUE_PARAMS, &d, &ESTIMATED, -1.0, 1.0, 1e-6).unwrap();
    assert!(mle.grad_norm < 1e-4, "grad norm {}", mle.grad_norm);
    assert_relative_eq!(mle.theta[1], -0.5163538, epsilon = 1e-5);
    assert_relative_eq!(mle.theta[2], 0.2940905, epsilon = 1e-5);
    assert_relative_eq!(mle.loglik, -489.8913047, epsilon = 1e-6);
    // no grid point does better
    for i in 0..=40 {
        for k in 0..=40 {
            let mut th = TRUE_PARAMS.to_vec();
            th[1] = -1.0 + 0.05 * i as f64;
            th[2] = -1.0 + 0.05 * k as f64;
            assert!(toy_loglik(&th, &d).unwrap() <= mle.loglik + 1e-9);
        }
    }
}

#[test]
fn standardized_innovations_are_white() {
    let spec = LinearGaussianSpec::from_toy_params(&TRUE_PARAMS);
    let d = lg_simulate(&spec, 5000, 7).unwrap();
    let k = kalman_loglik(&spec, &d).unwrap();
    let h = &spec.obs_matrix;
    let mut acc = nalgebra::Matrix2::<f64>::zeros();
    let mut mean = nalgebra::Vector2::<f64>::zeros();
    for (n, y) in d.observations.iter().enumerate() {
        let s = h * &k.pred_covs[n] * h.transpose() + &spec.obs_cov;
        let l = s.cholesky().unwrap().l();
        let e: DVector<f64> = l
            .solve_lower_triangular(&(DVector::from_column_slice(y) - h * &k.pred_means[n]))
            .unwrap();
        let e = nalgebra::Vector2::new(e[0], e[1]);
        mean += e;
        acc += e * e.transpose();
    }
    let n = d.len() as f64;
    mean /= n;
    acc /= n;
    // sd of a sample variance of N(0,1) is sqrt(2/n) ~ 0.02
    for i in 0..2 {
        assert!(mean[i].abs() < 0.06, "mean {mean}");
        for j in 0..2 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((acc[(i, j)] - target).abs() < 0.08, "cov {acc}");
        }
    }
}
