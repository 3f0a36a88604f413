//! Centered Gaussian graphical model parametrized by its precision matrix.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::solver::SmoothObjective;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalModel {
    precision: Tensor,
    covariance: Tensor,
    covariance_factor: DMatrix<f64>,
    log_det_precision: f64,
}

impl GraphicalModel {
    pub fn new(precision: Tensor) -> Result<Self> {
        let m = linalg::to_dmatrix(&precision)?;
        let chol = linalg::cholesky(&m, "precision matrix")?;
        let log_det_precision = linalg::log_det(&chol);
        let cov = symmetrize(chol.inverse());
        let cov_chol = linalg::cholesky(&cov, "covariance matrix")?;
        Ok(Self {
            precision,
            covariance: linalg::from_dmatrix(&cov),
            covariance_factor: cov_chol.l(),
            log_det_precision,
        })
    }

    pub fn p(&self) -> usize {
        self.precision.nrows()
    }

    pub fn precision(&self) -> &Tensor {
        &self.precision
    }

    pub fn covariance(&self) -> &Tensor {
        &self.covariance
    }

    pub fn log_det_precision(&self) -> f64 {
        self.log_det_precision
    }

    /// `n` i.i.d. draws `X = L N` with `L L^T` the covariance.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<GraphicalData> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let p = self.p();
        let mut data = Vec::with_capacity(n * p);
        for _ in 0..n {
            let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            data.extend((&self.covariance_factor * z).iter());
        }
        Ok(GraphicalData {
            samples: Tensor::matrix(n, p, data)?,
        })
    }

    /// Per-sample divergence
    /// `1/2 (<L, Sigma*> - log det L + log det L* - p)`.
    pub fn kl_loss(&self, estimate: &Tensor) -> Result<f64> {
        let m = linalg::to_dmatrix(estimate)?;
        if m.nrows() != self.p() || m.ncols() != self.p() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.p(), self.p()],
                actual: estimate.dims().to_vec(),
            });
        }
        let chol = linalg::cholesky(&m, "estimate")?;
        let value = 0.5
            * (estimate.inner(&self.covariance)? - linalg::log_det(&chol)
                + self.log_det_precision
                - self.p() as f64);
        Ok(value.max(0.0))
    }

    /// Stein's loss, twice the per-sample divergence.
    pub fn stein_loss(&self, estimate: &Tensor) -> Result<f64> {
        Ok(2.0 * self.kl_loss(estimate)?)
    }

    /// `Sigma* - S` for the sample second moment `S`.
    pub fn noise_matrix(&self, data: &GraphicalData) -> Result<Tensor> {
        let s = data.second_moment()?;
        if s.dims() != self.covariance.dims() {
            return Err(Error::ShapeMismatch {
                expected: self.covariance.dims().to_vec(),
                actual: s.dims().to_vec(),
            });
        }
        self.covariance.sub(&s)
    }
}

/// Samples stored as the rows of an `n x p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalData {
    pub samples: Tensor,
}

impl GraphicalData {
    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    /// `(1/n) sum_i X^i (X^i)^T`.
    pub fn second_moment(&self) -> Result<Tensor> {
        let x = linalg::to_dmatrix(&self.samples)?;
        let n = x.nrows().max(1) as f64;
        Ok(linalg::from_dmatrix(&symmetrize(x.transpose() * &x / n)))
    }
}

/// `<S, L> - log det L` over positive definite `L`.
#[derive(Debug, Clone)]
pub struct GraphicalObjective {
    second_moment: Tensor,
    s: DMatrix<f64>,
    dims: [usize; 2],
}

impl GraphicalObjective {
    pub fn new(second_moment: Tensor) -> Result<Self> {
        let s = linalg::to_dmatrix(&second_moment)?;
        let p = linalg::check_square(&s, "second-moment matrix")?;
        linalg::check_symmetric(&s, "second-moment matrix")?;
        Ok(Self {
            second_moment,
            s,
            dims: [p, p],
        })
    }

    pub fn from_data(data: &GraphicalData) -> Result<Self> {
        Self::new(data.second_moment()?)
    }

    pub fn second_moment(&self) -> &Tensor {
        &self.second_moment
    }

    fn factor(&self, x: &Tensor) -> Option<(DMatrix<f64>, f64)> {
        if x.dims() != self.dims {
            return None;
        }
        let m = linalg::to_dmatrix(x).ok()?;
        let chol = linalg::cholesky(&m, "iterate").ok()?;
        let log_det = linalg::log_det(&chol);
        Some((symmetrize(chol.inverse()), log_det))
    }
}

impl SmoothObjective for GraphicalObjective {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn value(&self, x: &Tensor) -> Option<f64> {
        if x.dims() != self.dims {
            return None;
        }
        let m = linalg::to_dmatrix(x).ok()?;
        let chol = linalg::cholesky(&m, "iterate").ok()?;
        Some(self.second_moment.inner(x).ok()? - linalg::log_det(&chol))
    }

    fn value_and_gradient(&self, x: &Tensor) -> Option<(f64, Tensor)> {
        let (inv, log_det) = self.factor(x)?;
        let value = self.second_moment.inner(x).ok()? - log_det;
        Some((value, linalg::from_dmatrix(&(&self.s - inv))))
    }

    /// With the dual point `c (S - L^{-1})`, the conjugate term is
    /// `-log det W - p` for `W = (1 - c) S + c L^{-1}`.
    fn conjugate_gap(&self, x: &Tensor, c: f64) -> Option<f64> {
        let (inv, log_det) = self.factor(x)?;
        let w = symmetrize(&self.s * (1.0 - c) + inv * c);
        let w_chol = linalg::cholesky(&w, "dual point").ok()?;
        let p = self.dims[0] as f64;
        Some(self.second_moment.inner(x).ok()? - log_det - p - linalg::log_det(&w_chol))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}
