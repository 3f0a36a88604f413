use mrle_core::models::{
    GlmData, GlmDesign, GlmFamily, GlmTensorModel, GraphicalData, GraphicalModel, GraphicalObjective,
    ModeCovariance, TensorRegressionData, TensorRegressionDesign, TensorRegressionModel,
};
use mrle_core::{linalg, SmoothObjective, Tensor};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha20Rng, dims: &[usize]) -> Tensor {
    let len: usize = dims.iter().product();
    Tensor::new(dims, (0..len).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn random_spd(rng: &mut ChaCha20Rng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.5);
    &a * a.transpose() + DMatrix::identity(p, p) * 0.5
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_gradient<S: SmoothObjective>(obj: &S, x: &Tensor, symmetric: bool) {
    let (_, grad) = obj.value_and_gradient(x).unwrap();
    let h = 1e-5;
    let dims = x.dims().to_vec();
    for k in 0..x.len() {
        let idx = x.shape().unravel(k);
        let mut bump = vec![0.0; x.len()];
        bump[k] = h;
        let mut factor = 1.0;
        if symmetric && idx[0] != idx[1] {
            bump[x.shape().offset(&[idx[1], idx[0]])] = h;
            factor = 2.0;
        }
        let e = Tensor::new(&dims, bump).unwrap();
        let fp = obj.value(&x.add(&e).unwrap()).unwrap();
        let fm = obj.value(&x.sub(&e).unwrap()).unwrap();
        let fd = (fp - fm) / (2.0 * h) / factor;
        let g = grad.data()[k];
        if g.abs() >= 1e-6 {
            assert!(
                (fd - g).abs() <= 1e-5 * g.abs(),
                "entry {idx:?}: analytic {g}, finite difference {fd}"
            );
        }
    }
}

fn tensor_instance(rng: &mut ChaCha20Rng, n: usize, dims: &[usize]) -> TensorRegressionModel {
    let z = gaussian(rng, &[n, dims[0]]);
    let covs = dims[1..]
        .iter()
        .map(|&b| ModeCovariance::new(linalg::from_dmatrix(&random_spd(rng, b))).unwrap())
        .collect();
    let design = TensorRegressionDesign::new(z, covs, dims).unwrap();
    TensorRegressionModel::new(gaussian(rng, dims), design).unwrap()
}

fn kronecker_covariance(model: &TensorRegressionModel) -> DMatrix<f64> {
    let mut k = DMatrix::from_element(1, 1, 1.0);
    for c in model.design().covariances() {
        k = k.kronecker(&linalg::to_dmatrix(c.sigma()).unwrap());
    }
    k
}

/// Mean of `vec Y^i` by explicit summation over the leading index.
fn loop_mean(l: &Tensor, z: &[f64]) -> DVector<f64> {
    let inner = l.len() / z.len();
    DVector::from_fn(inner, |r, _| {
        z.iter()
            .enumerate()
            .map(|(j, zj)| zj * l.data()[j * inner + r])
            .sum()
    })
}

#[test]
fn tensor_regression_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    for dims in [vec![3, 2], vec![2, 3, 2]] {
        let model = tensor_instance(&mut rng, 4, &dims);
        let data = model.sample(&mut rng).unwrap();
        let obj = model.objective(&data).unwrap();
        check_gradient(&obj, &gaussian(&mut rng, &dims), false);
        // zero residual gives zero value and gradient
        let exact = TensorRegressionData {
            responses: (0..4)
                .map(|i| model.truth().contract_leading(model.design().z().row(i)).unwrap())
                .collect(),
        };
        let (v, g) = model.objective(&exact).unwrap().value_and_gradient(model.truth()).unwrap();
        assert!(v.abs() < 1e-20 && g.max_abs() < 1e-12);
    }
}

#[test]
fn glm_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    for family in [GlmFamily::Logistic, GlmFamily::gaussian(2.5).unwrap()] {
        let dims = [2, 3];
        let covs: Vec<Tensor> = (0..6).map(|_| gaussian(&mut rng, &dims)).collect();
        let model =
            GlmTensorModel::new(gaussian(&mut rng, &dims), GlmDesign::new(&covs).unwrap(), family).unwrap();
        let data = model.sample(&mut rng).unwrap();
        check_gradient(&model.objective(&data).unwrap(), &gaussian(&mut rng, &dims), false);
    }
}

#[test]
fn graphical_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let model = GraphicalModel::new(linalg::from_dmatrix(&random_spd(&mut rng, 4))).unwrap();
    let data = model.sample(30, &mut rng).unwrap();
    let obj = GraphicalObjective::from_data(&data).unwrap();
    let at = linalg::from_dmatrix(&random_spd(&mut rng, 4));
    check_gradient(&obj, &at, true);
}

#[test]
fn tensor_regression_kl_matches_monte_carlo() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let dims = [2, 2, 2];
    let n = 3;
    for _ in 0..5 {
        let model = tensor_instance(&mut rng, n, &dims);
        let estimate = model.truth().add(&gaussian(&mut rng, &dims).scale(0.4)).unwrap();
        let cov = kronecker_covariance(&model);
        let chol = cov.clone().cholesky().unwrap();
        let l = chol.l();
        let prec = chol.inverse();
        let means: Vec<(DVector<f64>, DVector<f64>)> = (0..n)
            .map(|i| {
                let z = model.design().z().row(i);
                (loop_mean(model.truth(), z), loop_mean(&estimate, z))
            })
            .collect();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                means
                    .iter()
                    .map(|(m_star, m_hat)| {
                        let e = DVector::from_fn(cov.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
                        let y = m_star + &l * e;
                        let a = &y - m_hat;
                        let b = &y - m_star;
                        0.5 * (a.dot(&(&prec * &a)) - b.dot(&(&prec * &b)))
                    })
                    .sum()
            })
            .collect();
        let (mc, se) = mean_and_se(&draws);
        let exact = model.kl_loss(&estimate).unwrap();
        assert!((mc - exact).abs() <= 3.0 * se, "exact {exact}, monte carlo {mc} +- {se}");
    }
}

#[test]
fn glm_kl_matches_monte_carlo() {
    let mut rng = ChaCha20Rng::seed_from_u64(32);
    for family in [GlmFamily::Logistic, GlmFamily::gaussian(0.7).unwrap()] {
        for _ in 0..5 {
            let covs: Vec<Tensor> = (0..4).map(|_| gaussian(&mut rng, &[3])).collect();
            let model =
                GlmTensorModel::new(gaussian(&mut rng, &[3]), GlmDesign::new(&covs).unwrap(), family).unwrap();
            let estimate = model.truth().add(&gaussian(&mut rng, &[3]).scale(0.5)).unwrap();
            let theta_star = model.true_thetas();
            let theta_hat: Vec<f64> = covs.iter().map(|z| z.inner(&estimate).unwrap()).collect();
            let draws: Vec<f64> = (0..100_000)
                .map(|_| {
                    theta_star
                        .iter()
                        .zip(&theta_hat)
                        .map(|(&ts, &th)| match family {
                            GlmFamily::Logistic => {
                                let p = 1.0 / (1.0 + (-ts).exp());
                                let y = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                                let q = 1.0 / (1.0 + (-th).exp());
                                let lp = |pr: f64| if y == 1.0 { pr.ln() } else { (1.0 - pr).ln() };
                                lp(p) - lp(q)
                            }
                            GlmFamily::Gaussian { sigma2 } => {
                                let y = ts + sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal);
                                ((y - th).powi(2) - (y - ts).powi(2)) / (2.0 * sigma2)
                            }
                        })
                        .sum()
                })
                .collect();
            let (mc, se) = mean_and_se(&draws);
            let exact = model.kl_loss(&estimate).unwrap();
            assert!((mc - exact).abs() <= 3.0 * se, "{family:?}: exact {exact}, mc {mc} +- {se}");
        }
    }
}

#[test]
fn graphical_kl_matches_monte_carlo() {
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let p = 3;
    for _ in 0..5 {
        let prec_star = random_spd(&mut rng, p);
        let prec_hat = random_spd(&mut rng, p);
        let model = GraphicalModel::new(linalg::from_dmatrix(&prec_star)).unwrap();
        let cov = prec_star.clone().try_inverse().unwrap();
        let l = cov.cholesky().unwrap().l();
        let ld_star = prec_star.determinant().ln();
        let ld_hat = prec_hat.determinant().ln();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let x = &l * DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
                0.5 * (ld_star - x.dot(&(&prec_star * &x)) - ld_hat + x.dot(&(&prec_hat * &x)))
            })
            .collect();
        let (mc, se) = mean_and_se(&draws);
        let exact = model.kl_loss(&linalg::from_dmatrix(&prec_hat)).unwrap();
        assert!((mc - exact).abs() <= 3.0 * se, "exact {exact}, mc {mc} +- {se}");
    }
}

fn assert_mean_zero(samples: &[Tensor]) {
    let len = samples[0].len();
    for k in 0..len {
        let xs: Vec<f64> = samples.iter().map(|s| s.data()[k]).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean.abs() <= 4.0 * se, "coordinate {k}: mean {mean} with se {se}");
    }
}

#[test]
fn noise_terms_are_centered() {
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let reps = 10_000;

    let tr = tensor_instance(&mut rng, 5, &[3, 2, 2]);
    let samples: Vec<Tensor> = (0..reps)
        .map(|_| tr.noise_term(&tr.sample(&mut rng).unwrap()).unwrap())
        .collect();
    assert_mean_zero(&samples);

    for family in [GlmFamily::Logistic, GlmFamily::gaussian(1.3).unwrap()] {
        let covs: Vec<Tensor> = (0..6).map(|_| gaussian(&mut rng, &[4])).collect();
        let glm = GlmTensorModel::new(gaussian(&mut rng, &[4]), GlmDesign::new(&covs).unwrap(), family).unwrap();
        let samples: Vec<Tensor> = (0..reps)
            .map(|_| glm.noise_term(&glm.sample(&mut rng).unwrap()).unwrap())
            .collect();
        assert_mean_zero(&samples);
    }

    let g = GraphicalModel::new(linalg::from_dmatrix(&random_spd(&mut rng, 3))).unwrap();
    let samples: Vec<Tensor> = (0..reps)
        .map(|_| g.noise_matrix(&g.sample(20, &mut rng).unwrap()).unwrap())
        .collect();
    assert_mean_zero(&samples);
}

#[test]
fn degenerate_noise_terms_vanish() {
    // responses equal to their means
    let covs = vec![Tensor::vector(vec![1.0, -1.0]).unwrap(), Tensor::vector(vec![0.5, 2.0]).unwrap()];
    let design = GlmDesign::new(&covs).unwrap();
    let model = GlmTensorModel::new(
        Tensor::vector(vec![0.3, 0.1]).unwrap(),
        design,
        GlmFamily::gaussian(2.0).unwrap(),
    )
    .unwrap();
    let data = GlmData {
        responses: model.true_thetas(),
    };
    assert_eq!(model.noise_term(&data).unwrap().max_abs(), 0.0);
}

#[test]
fn graphical_noise_shrinks_with_sample_size() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let g = GraphicalModel::new(linalg::from_dmatrix(&random_spd(&mut rng, 3))).unwrap();
    let variance = |n: usize, rng: &mut ChaCha20Rng| -> f64 {
        let xs: Vec<f64> = (0..4000)
            .map(|_| g.noise_matrix(&g.sample(n, rng).unwrap()).unwrap().data()[1])
            .collect();
        let (m, _) = mean_and_se(&xs);
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
    };
    let v1 = variance(25, &mut rng);
    let v4 = variance(100, &mut rng);
    // variance scales as 1/n, so the standard deviation halves
    let ratio = v1 / v4;
    assert!((3.3..4.8).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn identity_array_normal_is_standard() {
    let mut rng = ChaCha20Rng::seed_from_u64(51);
    let z = Tensor::matrix(1, 1, vec![1.0]).unwrap();
    let design = TensorRegressionDesign::with_identity_noise(z, &[1, 2, 3]).unwrap();
    let model = TensorRegressionModel::new(Tensor::zeros(&[1, 2, 3]).unwrap(), design).unwrap();
    let draws: Vec<Tensor> = (0..10_000)
        .map(|_| model.sample(&mut rng).unwrap().responses.remove(0))
        .collect();
    let n = draws.len() as f64;
    for k in 0..6 {
        let xs: Vec<f64> = draws.iter().map(|d| d.data()[k]).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean.abs() <= 4.0 * se);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
        // sd of the sample variance of N(0,1) is sqrt(2/n)
        assert!((var - 1.0).abs() <= 4.0 * (2.0 / n).sqrt(), "variance {var}");
    }
}

#[test]
fn array_normal_covariance_is_kronecker() {
    let mut rng = ChaCha20Rng::seed_from_u64(52);
    let z = Tensor::matrix(1, 1, vec![0.0]).unwrap();
    let covs = vec![
        ModeCovariance::ar1(2, 0.6).unwrap(),
        ModeCovariance::new(linalg::from_dmatrix(&random_spd(&mut rng, 3))).unwrap(),
    ];
    let design = TensorRegressionDesign::new(z, covs, &[1, 2, 3]).unwrap();
    let model = TensorRegressionModel::new(Tensor::zeros(&[1, 2, 3]).unwrap(), design).unwrap();
    let oracle = kronecker_covariance(&model);
    let reps = 100_000;
    let mut acc = DMatrix::zeros(6, 6);
    for _ in 0..reps {
        let y = DVector::from_column_slice(model.sample(&mut rng).unwrap().responses[0].data());
        acc += &y * y.transpose();
    }
    let emp = acc / reps as f64;
    for i in 0..6 {
        for j in 0..6 {
            let se = ((oracle[(i, i)] * oracle[(j, j)] + oracle[(i, j)].powi(2)) / reps as f64).sqrt();
            assert!(
                (emp[(i, j)] - oracle[(i, j)]).abs() <= 4.0 * se,
                "({i}, {j}): {} vs {}",
                emp[(i, j)],
                oracle[(i, j)]
            );
        }
    }
}

#[test]
fn logistic_sampler_means() {
    let mut rng = ChaCha20Rng::seed_from_u64(53);
    let covs = vec![Tensor::vector(vec![1.0]).unwrap(); 10_000];
    for (theta, target) in [(0.0, 0.5), (2.0, 2f64.exp() / (1.0 + 2f64.exp()))] {
        let model = GlmTensorModel::new(
            Tensor::vector(vec![theta]).unwrap(),
            GlmDesign::new(&covs).unwrap(),
            GlmFamily::Logistic,
        )
        .unwrap();
        let y = model.sample(&mut rng).unwrap().responses;
        assert!(y.iter().all(|&v| v == 0.0 || v == 1.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let se = (target * (1.0 - target) / y.len() as f64).sqrt();
        assert!((mean - target).abs() <= 4.0 * se, "mean {mean} vs {target}");
    }
    assert!((2f64.exp() / (1.0 + 2f64.exp()) - 0.8808).abs() < 1e-4);
}

#[test]
fn graphical_sampler_covariance() {
    let mut rng = ChaCha20Rng::seed_from_u64(54);
    let prec = random_spd(&mut rng, 3);
    let model = GraphicalModel::new(linalg::from_dmatrix(&prec)).unwrap();
    let n = 100_000;
    let data = model.sample(n, &mut rng).unwrap();
    let emp = data.second_moment().unwrap();
    let cov = model.covariance();
    for i in 0..3 {
        for j in 0..3 {
            let c = |a: usize, b: usize| cov.get(&[a, b]);
            let se = ((c(i, i) * c(j, j) + c(i, j).powi(2)) / n as f64).sqrt();
            assert!((emp.get(&[i, j]) - c(i, j)).abs() <= 4.0 * se);
        }
    }
    let a = model.sample(5, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
    let b = model.sample(5, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
    let id = GraphicalModel::new(Tensor::identity(2).unwrap()).unwrap();
    let x = id.sample(1, &mut ChaCha20Rng::seed_from_u64(4)).unwrap();
    let mut direct = ChaCha20Rng::seed_from_u64(4);
    let expected: Vec<f64> = (0..2).map(|_| direct.sample(StandardNormal)).collect();
    assert_eq!(x.samples.data(), expected.as_slice());
}

/// Cyclic coordinate descent for `||y - Z b||^2 + r' ||b||_1`.
fn lasso_cd(z: &DMatrix<f64>, y: &DVector<f64>, r_prime: f64) -> DVector<f64> {
    let d = z.ncols();
    let mut b = DVector::zeros(d);
    let col_sq: Vec<f64> = (0..d).map(|j| z.column(j).norm_squared()).collect();
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for j in 0..d {
            let resid = y - z * &b + z.column(j) * b[j];
            let rho = z.column(j).dot(&resid);
            let new = rho.signum() * (rho.abs() - r_prime / 2.0).max(0.0) / col_sq[j];
            change = change.max((new - b[j]).abs());
            b[j] = new;
        }
        if change < 1e-14 {
            break;
        }
    }
    b
}

#[test]
fn lasso_reduction() {
    let mut rng = ChaCha20Rng::seed_from_u64(61);
    let (n, d) = (30, 5);
    let sigma2 = 1.7;
    let z = gaussian(&mut rng, &[n, d]);
    let design =
        TensorRegressionDesign::new(z.clone(), vec![ModeCovariance::new(Tensor::matrix(1, 1, vec![sigma2]).unwrap()).unwrap()], &[d, 1])
            .unwrap();
    let beta_star = Tensor::matrix(d, 1, vec![1.5, 0.0, -2.0, 0.0, 0.7]).unwrap();
    let model = TensorRegressionModel::new(beta_star.clone(), design).unwrap();
    let data = model.sample(&mut rng).unwrap();

    let zm = linalg::to_dmatrix(&z).unwrap();
    let y = DVector::from_iterator(n, data.responses.iter().map(|r| r.data()[0]));

    // value equals the scaled least-squares criterion
    let obj = model.objective(&data).unwrap();
    let b = gaussian(&mut rng, &[d, 1]);
    let bv = DVector::from_column_slice(b.data());
    let ls = (&y - &zm * &bv).norm_squared() / (2.0 * sigma2);
    assert!((obj.value(&b).unwrap() - ls).abs() < 1e-10 * ls.max(1.0));

    let r_prime = 8.0;
    let reference = lasso_cd(&zm, &y, r_prime);
    let settings = mrle_core::SolverSettings {
        max_iterations: 100_000,
        objective_tolerance: 1e-15,
        ..Default::default()
    };
    let fit = mrle_core::fit(
        &obj,
        &mrle_core::GaugeSpec::L1,
        r_prime / (2.0 * sigma2),
        &Tensor::zeros(&[d, 1]).unwrap(),
        &settings,
    )
    .unwrap();
    for (a, b) in fit.estimate.data().iter().zip(reference.iter()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    let beta_hat = DVector::from_column_slice(fit.estimate.data());
    let bs = DVector::from_column_slice(beta_star.data());
    let pred = (&zm * (&bs - &beta_hat)).norm_squared();
    let kl = model.kl_loss(&fit.estimate).unwrap();
    assert!((kl * 2.0 * sigma2 - pred).abs() < 1e-8, "{} vs {pred}", kl * 2.0 * sigma2);
}

#[test]
fn scalar_noise_is_lasso_noise_vector() {
    let mut rng = ChaCha20Rng::seed_from_u64(62);
    let (n, d) = (8, 3);
    let z = gaussian(&mut rng, &[n, d]);
    let design = TensorRegressionDesign::with_identity_noise(z.clone(), &[d, 1]).unwrap();
    let truth = gaussian(&mut rng, &[d, 1]);
    let model = TensorRegressionModel::new(truth.clone(), design).unwrap();
    let data = model.sample(&mut rng).unwrap();
    let zm = linalg::to_dmatrix(&z).unwrap();
    let eps = DVector::from_iterator(
        n,
        (0..n).map(|i| data.responses[i].data()[0] - (&zm.row(i) * DVector::from_column_slice(truth.data()))[0]),
    );
    let expected = zm.transpose() * eps;
    let noise = model.noise_term(&data).unwrap();
    for (a, b) in noise.data().iter().zip(expected.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn gaussian_glm_matches_tensor_regression() {
    let mut rng = ChaCha20Rng::seed_from_u64(63);
    let (n, d, sigma2) = (7, 4, 0.8);
    let rows = gaussian(&mut rng, &[n, d]);
    let truth = gaussian(&mut rng, &[d]);
    let estimate = gaussian(&mut rng, &[d]);
    let glm = GlmTensorModel::new(
        truth.clone(),
        GlmDesign::from_matrix(rows.clone(), &[d]).unwrap(),
        GlmFamily::gaussian(sigma2).unwrap(),
    )
    .unwrap();
    let tr = TensorRegressionModel::new(
        truth.reshape(&[d, 1]).unwrap(),
        TensorRegressionDesign::new(
            rows.clone(),
            vec![ModeCovariance::new(Tensor::matrix(1, 1, vec![sigma2]).unwrap()).unwrap()],
            &[d, 1],
        )
        .unwrap(),
    )
    .unwrap();
    let a = glm.kl_loss(&estimate).unwrap();
    let b = tr.kl_loss(&estimate.reshape(&[d, 1]).unwrap()).unwrap();
    assert!((a - b).abs() < 1e-12 * a.max(1.0));
    let direct: f64 = (0..n)
        .map(|i| {
            let diff: f64 = rows.row(i).iter().zip(truth.sub(&estimate).unwrap().data()).map(|(z, v)| z * v).sum();
            diff * diff
        })
        .sum::<f64>()
        / (2.0 * sigma2);
    assert!((a - direct).abs() < 1e-12 * a.max(1.0));

    // objective is least squares up to a data-only constant
    let data = glm.sample(&mut rng).unwrap();
    let obj = glm.objective(&data).unwrap();
    let constant = -data.responses.iter().map(|y| y * y).sum::<f64>() / (2.0 * sigma2);
    let thetas = glm.design().linear_predictor(&estimate).unwrap();
    let ls: f64 = thetas.iter().zip(&data.responses).map(|(t, y)| (y - t).powi(2)).sum::<f64>() / (2.0 * sigma2);
    assert!((obj.value(&estimate).unwrap() - (ls + constant)).abs() < 1e-10);
}

#[test]
fn kl_losses_are_nonnegative_and_vanish_at_truth() {
    let mut rng = ChaCha20Rng::seed_from_u64(64);
    let tr = tensor_instance(&mut rng, 4, &[2, 3]);
    assert_eq!(tr.kl_loss(tr.truth()).unwrap(), 0.0);
    let covs: Vec<Tensor> = (0..5).map(|_| gaussian(&mut rng, &[3])).collect();
    let glm = GlmTensorModel::new(gaussian(&mut rng, &[3]), GlmDesign::new(&covs).unwrap(), GlmFamily::Logistic)
        .unwrap();
    assert!(glm.kl_loss(glm.truth()).unwrap().abs() < 1e-14);
    let g = GraphicalModel::new(linalg::from_dmatrix(&random_spd(&mut rng, 3))).unwrap();
    assert!(g.kl_loss(g.precision()).unwrap().abs() < 1e-12);
    for _ in 0..200 {
        assert!(tr.kl_loss(&gaussian(&mut rng, &[2, 3])).unwrap() >= 0.0);
        assert!(glm.kl_loss(&gaussian(&mut rng, &[3]).scale(3.0)).unwrap() >= 0.0);
        assert!(g.kl_loss(&linalg::from_dmatrix(&random_spd(&mut rng, 3))).unwrap() >= 0.0);
    }
    assert!(tr.kl_loss(&Tensor::zeros(&[3, 2]).unwrap()).is_err());
}

#[test]
fn graphical_data_second_moment() {
    let data = GraphicalData {
        samples: Tensor::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap(),
    };
    let s = data.second_moment().unwrap();
    assert_eq!(s.data(), &[5.0, -0.5, -0.5, 2.5]);
}
