//! Tensor-response regression with array-normal noise:
//! `Y^i = L x_0 z^i + E^i` where `E^i` has Kronecker-structured covariance
//! `Sigma_p (x) .. (x) Sigma_2` over the response modes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::solver::SmoothObjective;
use crate::tensor::{MatrixList, Tensor};

/// Covariance of one response mode with its derived factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCovariance {
    sigma: Tensor,
    factor: Tensor,
    factor_inverse: Tensor,
    precision: Tensor,
    max_eigenvalue: f64,
    identity: bool,
}

impl ModeCovariance {
    pub fn new(sigma: Tensor) -> Result<Self> {
        let m = linalg::to_dmatrix(&sigma)?;
        let b = linalg::check_square(&m, "mode covariance")?;
        let chol = linalg::cholesky(&m, "mode covariance")?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("mode covariance factor".into()))?;
        let precision = chol.inverse();
        let identity = m == DMatrix::identity(b, b);
        Ok(Self {
            max_eigenvalue: linalg::max_eigenvalue(&m),
            sigma,
            factor: linalg::from_dmatrix(&l),
            factor_inverse: linalg::from_dmatrix(&l_inv),
            precision: linalg::from_dmatrix(&precision),
            identity,
        })
    }

    pub fn identity(b: usize) -> Result<Self> {
        Self::new(Tensor::identity(b)?)
    }

    /// `variance * ((1 - rho) I + rho 11^T)`.
    pub fn equicorrelated(b: usize, rho: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!("variance {variance}")));
        }
        let lower = if b > 1 { -1.0 / (b as f64 - 1.0) } else { -1.0 };
        if !(rho > lower && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "equicorrelation {rho} outside ({lower}, 1) for dimension {b}"
            )));
        }
        Self::new(Tensor::from_fn(&[b, b], |ix| {
            variance * if ix[0] == ix[1] { 1.0 } else { rho }
        })?)
    }

    /// `Sigma[i][j] = rho^|i - j|`.
    pub fn ar1(b: usize, rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "AR(1) coefficient {rho} must satisfy |rho| < 1"
            )));
        }
        Self::new(Tensor::from_fn(&[b, b], |ix| {
            rho.powi(ix[0].abs_diff(ix[1]) as i32)
        })?)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &Tensor {
        &self.sigma
    }

    /// Lower Cholesky factor `A` with `Sigma = A A^T`.
    pub fn factor(&self) -> &Tensor {
        &self.factor
    }

    pub fn factor_inverse(&self) -> &Tensor {
        &self.factor_inverse
    }

    pub fn precision(&self) -> &Tensor {
        &self.precision
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }
}

/// Covariates and noise structure, shared by every replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRegressionDesign {
    z: Tensor,
    z_transpose: Tensor,
    covariances: Vec<ModeCovariance>,
    param_dims: Vec<usize>,
    strong_convexity: f64,
}

impl TensorRegressionDesign {
    /// `z` is `n x b_1`; `covariances` holds one matrix per response mode.
    pub fn new(z: Tensor, covariances: Vec<ModeCovariance>, param_dims: &[usize]) -> Result<Self> {
        if param_dims.len() < 2 {
            return Err(Error::InvalidShape(
                "tensor regression needs a parameter of order >= 2".into(),
            ));
        }
        if z.order() != 2 || z.nrows() == 0 || z.ncols() != param_dims[0] {
            return Err(Error::ShapeMismatch {
                expected: vec![z.dims().first().copied().unwrap_or(0), param_dims[0]],
                actual: z.dims().to_vec(),
            });
        }
        if covariances.len() != param_dims.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} mode covariances, got {}",
                param_dims.len() - 1,
                covariances.len()
            )));
        }
        for (k, c) in covariances.iter().enumerate() {
            if c.dim() != param_dims[k + 1] {
                return Err(Error::ShapeMismatch {
                    expected: vec![param_dims[k + 1], param_dims[k + 1]],
                    actual: c.sigma().dims().to_vec(),
                });
            }
        }
        let zm = linalg::to_dmatrix(&z)?;
        let gram = zm.transpose() * &zm;
        let mu = linalg::min_eigenvalue(&gram).max(0.0)
            / covariances.iter().map(|c| c.max_eigenvalue).product::<f64>();
        Ok(Self {
            z_transpose: z.transpose()?,
            z,
            covariances,
            param_dims: param_dims.to_vec(),
            strong_convexity: mu,
        })
    }

    /// Design with identity noise covariance in every response mode.
    pub fn with_identity_noise(z: Tensor, param_dims: &[usize]) -> Result<Self> {
        let covs = param_dims
            .iter()
            .skip(1)
            .map(|&b| ModeCovariance::identity(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(z, covs, param_dims)
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn z(&self) -> &Tensor {
        &self.z
    }

    pub fn covariances(&self) -> &[ModeCovariance] {
        &self.covariances
    }

    pub fn param_dims(&self) -> &[usize] {
        &self.param_dims
    }

    pub fn response_dims(&self) -> &[usize] {
        &self.param_dims[1..]
    }

    /// Smallest Hessian eigenvalue of the negative log-likelihood:
    /// `lambda_min(Z^T Z) * prod_k lambda_min(Sigma_k^{-1})`.
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    fn apply_from(&self, stacked: &Tensor, pick: impl Fn(&ModeCovariance) -> &Tensor) -> Result<Tensor> {
        let mut out = stacked.clone();
        for (k, c) in self.covariances.iter().enumerate() {
            if !c.identity {
                out = out.mode_product(pick(c), k + 1)?;
            }
        }
        Ok(out)
    }

    /// `S x {A_k^{-1}}` on the response modes of a stacked tensor.
    fn whiten_stacked(&self, stacked: &Tensor) -> Result<Tensor> {
        self.apply_from(stacked, |c| &c.factor_inverse)
    }

    fn precision_stacked(&self, stacked: &Tensor) -> Result<Tensor> {
        self.apply_from(stacked, |c| &c.precision)
    }

    /// `R x {A_k^{-1}}` for a single response-shaped tensor.
    pub fn whiten(&self, r: &Tensor) -> Result<Tensor> {
        self.check_response(r)?;
        let list = MatrixList::full(self.covariances.iter().map(|c| c.factor_inverse.clone()).collect())?;
        r.tucker_product(&list)
    }

    /// `R x {Sigma_k^{-1}}` for a single response-shaped tensor.
    pub fn precision_apply(&self, r: &Tensor) -> Result<Tensor> {
        self.check_response(r)?;
        let list = MatrixList::full(self.covariances.iter().map(|c| c.precision.clone()).collect())?;
        r.tucker_product(&list)
    }

    /// `N x {A_k}`: maps white noise to array-normal noise.
    pub fn color(&self, noise: &Tensor) -> Result<Tensor> {
        self.check_response(noise)?;
        let list = MatrixList::full(self.covariances.iter().map(|c| c.factor.clone()).collect())?;
        noise.tucker_product(&list)
    }

    fn check_response(&self, r: &Tensor) -> Result<()> {
        if r.dims() != self.response_dims() {
            return Err(Error::ShapeMismatch {
                expected: self.response_dims().to_vec(),
                actual: r.dims().to_vec(),
            });
        }
        Ok(())
    }

    fn check_param(&self, l: &Tensor) -> Result<()> {
        if l.dims() != self.param_dims.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: self.param_dims.clone(),
                actual: l.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Stacked predictions `L x_0 Z`, shape `n x b_2 x .. x b_p`.
    fn predict(&self, l: &Tensor) -> Result<Tensor> {
        l.mode_product(&self.z, 0)
    }

    /// `sum_i z^i o (S^i)` for a stacked tensor `S`.
    fn back_project(&self, stacked: &Tensor) -> Result<Tensor> {
        stacked.mode_product(&self.z_transpose, 0)
    }

    fn stack(&self, responses: &[Tensor]) -> Result<Tensor> {
        if responses.len() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "expected {} responses, got {}",
                self.n(),
                responses.len()
            )));
        }
        let mut dims = vec![self.n()];
        dims.extend_from_slice(self.response_dims());
        let mut data = Vec::with_capacity(dims.iter().product());
        for r in responses {
            self.check_response(r)?;
            data.extend_from_slice(r.data());
        }
        Tensor::new(&dims, data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRegressionData {
    pub responses: Vec<Tensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRegressionModel {
    truth: Tensor,
    design: TensorRegressionDesign,
}

impl TensorRegressionModel {
    pub fn new(truth: Tensor, design: TensorRegressionDesign) -> Result<Self> {
        design.check_param(&truth)?;
        Ok(Self { truth, design })
    }

    pub fn truth(&self) -> &Tensor {
        &self.truth
    }

    pub fn design(&self) -> &TensorRegressionDesign {
        &self.design
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TensorRegressionData> {
        let dims = self.design.response_dims();
        let size: usize = dims.iter().product();
        let mut responses = Vec::with_capacity(self.design.n());
        for i in 0..self.design.n() {
            let noise: Vec<f64> = (0..size).map(|_| rng.sample(StandardNormal)).collect();
            let e = self.design.color(&Tensor::new(dims, noise)?)?;
            let mean = self.truth.contract_leading(self.design.z.row(i))?;
            responses.push(mean.add(&e)?);
        }
        Ok(TensorRegressionData { responses })
    }

    /// `1/2 sum_i ||(L* - L) x_0 z^i x Sigma^{-1/2}||^2`.
    pub fn kl_loss(&self, estimate: &Tensor) -> Result<f64> {
        self.design.check_param(estimate)?;
        let diff = self.truth.sub(estimate)?;
        let white = self.design.whiten_stacked(&self.design.predict(&diff)?)?;
        Ok(0.5 * white.norm_sq())
    }

    /// `sum_i z^i o (E^i x Sigma^{-1})` with `E^i = Y^i - L* x_0 z^i`.
    pub fn noise_term(&self, data: &TensorRegressionData) -> Result<Tensor> {
        let residual = self.design.stack(&data.responses)?.sub(&self.design.predict(&self.truth)?)?;
        self.design.back_project(&self.design.precision_stacked(&residual)?)
    }

    pub fn objective(&self, data: &TensorRegressionData) -> Result<TensorRegressionObjective> {
        TensorRegressionObjective::new(self.design.clone(), data)
    }
}

/// `1/2 sum_i ||(Y^i - L x_0 z^i) x Sigma^{-1/2}||^2`.
#[derive(Debug, Clone)]
pub struct TensorRegressionObjective {
    design: TensorRegressionDesign,
    stacked: Tensor,
}

impl TensorRegressionObjective {
    pub fn new(design: TensorRegressionDesign, data: &TensorRegressionData) -> Result<Self> {
        let stacked = design.stack(&data.responses)?;
        Ok(Self { design, stacked })
    }

    fn residual(&self, l: &Tensor) -> Option<Tensor> {
        self.design.check_param(l).ok()?;
        self.stacked.sub(&self.design.predict(l).ok()?).ok()
    }
}

impl SmoothObjective for TensorRegressionObjective {
    fn dims(&self) -> &[usize] {
        self.design.param_dims()
    }

    fn value(&self, x: &Tensor) -> Option<f64> {
        let r = self.residual(x)?;
        Some(0.5 * self.design.whiten_stacked(&r).ok()?.norm_sq())
    }

    fn value_and_gradient(&self, x: &Tensor) -> Option<(f64, Tensor)> {
        let r = self.residual(x)?;
        let mr = self.design.precision_stacked(&r).ok()?;
        let value = 0.5 * mr.inner(&r).ok()?;
        let grad = self.design.back_project(&mr).ok()?.scale(-1.0);
        Some((value, grad))
    }

    fn conjugate_gap(&self, x: &Tensor, c: f64) -> Option<f64> {
        let r = self.residual(x)?;
        let mr = self.design.precision_stacked(&r).ok()?;
        let quad = mr.inner(&r).ok()?;
        let grad = self.design.back_project(&mr).ok()?.scale(-1.0);
        Some(0.5 * (1.0 - c) * (1.0 - c) * quad + c * grad.inner(x).ok()?)
    }

    fn strong_convexity(&self) -> Option<f64> {
        let mu = self.design.strong_convexity();
        (mu > 0.0).then_some(mu)
    }
}
