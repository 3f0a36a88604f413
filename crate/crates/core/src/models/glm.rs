//! Generalized linear tensor regression with canonical link:
//! `y^i ~ exp((y theta^i - b(theta^i)) / alpha)`, `theta^i = <L*, Z^i>`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{log1p_exp, sigmoid};
use crate::error::{Error, Result};
use crate::linalg;
use crate::solver::SmoothObjective;
use crate::tensor::Tensor;

/// Largest parameter size for which the Gaussian strong-convexity modulus is
/// computed (it needs a dense `d x d` eigendecomposition).
const MAX_EIGEN_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlmFamily {
    /// Bernoulli responses, `b(theta) = log(1 + e^theta)`, `alpha = 1`.
    Logistic,
    /// Normal responses with variance `sigma2`, `b(theta) = theta^2 / 2`.
    Gaussian { sigma2: f64 },
}

impl GlmFamily {
    pub fn gaussian(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian variance {sigma2}")));
        }
        Ok(GlmFamily::Gaussian { sigma2 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::Logistic => "logistic",
            GlmFamily::Gaussian { .. } => "gaussian",
        }
    }

    /// Overdispersion factor.
    pub fn alpha(&self) -> f64 {
        match *self {
            GlmFamily::Logistic => 1.0,
            GlmFamily::Gaussian { sigma2 } => sigma2,
        }
    }

    /// Log-partition function.
    pub fn b(&self, theta: f64) -> f64 {
        match self {
            GlmFamily::Logistic => log1p_exp(theta),
            GlmFamily::Gaussian { .. } => 0.5 * theta * theta,
        }
    }

    /// Mean `b'(theta)`.
    pub fn mean(&self, theta: f64) -> f64 {
        match self {
            GlmFamily::Logistic => sigmoid(theta),
            GlmFamily::Gaussian { .. } => theta,
        }
    }

    /// Convex conjugate `b*(m)`; infinite outside its domain.
    pub fn b_conjugate(&self, m: f64) -> f64 {
        match self {
            GlmFamily::Logistic => {
                if !(0.0..=1.0).contains(&m) {
                    return f64::INFINITY;
                }
                let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
                xlogx(m) + xlogx(1.0 - m)
            }
            GlmFamily::Gaussian { .. } => 0.5 * m * m,
        }
    }
}

/// Covariate tensors `Z^i`, stored as the rows of an `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmDesign {
    rows: Tensor,
    param_dims: Vec<usize>,
}

impl GlmDesign {
    pub fn new(covariates: &[Tensor]) -> Result<Self> {
        let first = covariates
            .first()
            .ok_or_else(|| Error::InvalidParameter("design needs at least one observation".into()))?;
        let dims = first.dims().to_vec();
        let mut data = Vec::with_capacity(covariates.len() * first.len());
        for z in covariates {
            if z.dims() != dims.as_slice() {
                return Err(Error::ShapeMismatch {
                    expected: dims.clone(),
                    actual: z.dims().to_vec(),
                });
            }
            data.extend_from_slice(z.data());
        }
        let rows = Tensor::matrix(covariates.len(), first.len(), data)?;
        Ok(Self {
            rows,
            param_dims: dims,
        })
    }

    /// Builds the design from an `n x d` matrix whose rows are `vec Z^i`.
    pub fn from_matrix(rows: Tensor, param_dims: &[usize]) -> Result<Self> {
        let d: usize = param_dims.iter().product();
        if rows.order() != 2 || rows.nrows() == 0 || rows.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected: vec![rows.dims().first().copied().unwrap_or(0), d],
                actual: rows.dims().to_vec(),
            });
        }
        crate::tensor::Shape::new(param_dims)?;
        Ok(Self {
            rows,
            param_dims: param_dims.to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn param_dims(&self) -> &[usize] {
        &self.param_dims
    }

    /// The `n x d` matrix of vectorized covariates.
    pub fn matrix(&self) -> &Tensor {
        &self.rows
    }

    pub fn covariate(&self, i: usize) -> Tensor {
        Tensor::new(&self.param_dims, self.rows.row(i).to_vec()).expect("row matches shape")
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

    /// Natural parameters `theta^i = <L, Z^i>`.
    pub fn linear_predictor(&self, l: &Tensor) -> Result<Vec<f64>> {
        self.check_param(l)?;
        Ok((0..self.n())
            .map(|i| {
                self.rows
                    .row(i)
                    .iter()
                    .zip(l.data())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `sum_i w_i Z^i`.
    pub fn weighted_sum(&self, weights: &[f64]) -> Tensor {
        let d = self.rows.ncols();
        let mut out = vec![0.0; d];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, z) in out.iter_mut().zip(self.rows.row(i)) {
                *o += w * z;
            }
        }
        Tensor::new(&self.param_dims, out).expect("finite weighted sum")
    }

    fn gram_min_eigenvalue(&self) -> Option<f64> {
        let d = self.rows.ncols();
        if d > MAX_EIGEN_DIM {
            return None;
        }
        let m = linalg::to_dmatrix(&self.rows).ok()?;
        Some(linalg::min_eigenvalue(&(m.transpose() * &m)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmData {
    pub responses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmTensorModel {
    truth: Tensor,
    design: GlmDesign,
    family: GlmFamily,
}

impl GlmTensorModel {
    pub fn new(truth: Tensor, design: GlmDesign, family: GlmFamily) -> Result<Self> {
        design.check_param(&truth)?;
        if let GlmFamily::Gaussian { sigma2 } = family {
            GlmFamily::gaussian(sigma2)?;
        }
        Ok(Self {
            truth,
            design,
            family,
        })
    }

    pub fn truth(&self) -> &Tensor {
        &self.truth
    }

    pub fn design(&self) -> &GlmDesign {
        &self.design
    }

    pub fn family(&self) -> GlmFamily {
        self.family
    }

    /// Natural parameters at the true value.
    pub fn true_thetas(&self) -> Vec<f64> {
        self.design
            .linear_predictor(&self.truth)
            .expect("truth matches design")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GlmData> {
        let responses = self
            .true_thetas()
            .into_iter()
            .map(|theta| match self.family {
                GlmFamily::Logistic => {
                    let u: f64 = rng.random();
                    if u < sigmoid(theta) {
                        1.0
                    } else {
                        0.0
                    }
                }
                GlmFamily::Gaussian { sigma2 } => {
                    let e: f64 = rng.sample(StandardNormal);
                    theta + sigma2.sqrt() * e
                }
            })
            .collect();
        Ok(GlmData { responses })
    }

    /// `(1/alpha) sum_i (mu(theta*)(theta* - theta) - b(theta*) + b(theta))`.
    pub fn kl_loss(&self, estimate: &Tensor) -> Result<f64> {
        let est = self.design.linear_predictor(estimate)?;
        let f = &self.family;
        let total: f64 = self
            .true_thetas()
            .iter()
            .zip(&est)
            .map(|(&ts, &th)| f.mean(ts) * (ts - th) - f.b(ts) + f.b(th))
            .sum();
        Ok((total / f.alpha()).max(0.0))
    }

    /// `(1/alpha) sum_i (y^i - mu(theta*^i)) Z^i`.
    pub fn noise_term(&self, data: &GlmData) -> Result<Tensor> {
        self.check_data(data)?;
        let a = self.family.alpha();
        let w: Vec<f64> = self
            .true_thetas()
            .iter()
            .zip(&data.responses)
            .map(|(&t, &y)| (y - self.family.mean(t)) / a)
            .collect();
        Ok(self.design.weighted_sum(&w))
    }

    pub fn objective(&self, data: &GlmData) -> Result<GlmObjective> {
        GlmObjective::new(self.design.clone(), self.family, data)
    }

    fn check_data(&self, data: &GlmData) -> Result<()> {
        if data.responses.len() != self.design.n() {
            return Err(Error::InvalidParameter(format!(
                "expected {} responses, got {}",
                self.design.n(),
                data.responses.len()
            )));
        }
        Ok(())
    }
}

/// `(1/alpha) sum_i (b(<L, Z^i>) - y^i <L, Z^i>)`.
#[derive(Debug, Clone)]
pub struct GlmObjective {
    design: GlmDesign,
    family: GlmFamily,
    responses: Vec<f64>,
    strong_convexity: Option<f64>,
}

impl GlmObjective {
    pub fn new(design: GlmDesign, family: GlmFamily, data: &GlmData) -> Result<Self> {
        if data.responses.len() != design.n() {
            return Err(Error::InvalidParameter(format!(
                "expected {} responses, got {}",
                design.n(),
                data.responses.len()
            )));
        }
        if data.responses.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        if family == GlmFamily::Logistic && data.responses.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidParameter("logistic responses must be 0 or 1".into()));
        }
        let strong_convexity = match family {
            GlmFamily::Gaussian { sigma2 } => design
                .gram_min_eigenvalue()
                .map(|e| e / sigma2)
                .filter(|&mu| mu > 0.0),
            GlmFamily::Logistic => None,
        };
        Ok(Self {
            design,
            family,
            responses: data.responses.clone(),
            strong_convexity,
        })
    }
}

impl SmoothObjective for GlmObjective {
    fn dims(&self) -> &[usize] {
        self.design.param_dims()
    }

    fn value(&self, x: &Tensor) -> Option<f64> {
        let thetas = self.design.linear_predictor(x).ok()?;
        let total: f64 = thetas
            .iter()
            .zip(&self.responses)
            .map(|(&t, &y)| self.family.b(t) - y * t)
            .sum();
        Some(total / self.family.alpha())
    }

    fn value_and_gradient(&self, x: &Tensor) -> Option<(f64, Tensor)> {
        let thetas = self.design.linear_predictor(x).ok()?;
        let a = self.family.alpha();
        let mut total = 0.0;
        let mut w = Vec::with_capacity(thetas.len());
        for (&t, &y) in thetas.iter().zip(&self.responses) {
            total += self.family.b(t) - y * t;
            w.push((self.family.mean(t) - y) / a);
        }
        Some((total / a, self.design.weighted_sum(&w)))
    }

    fn conjugate_gap(&self, x: &Tensor, c: f64) -> Option<f64> {
        let thetas = self.design.linear_predictor(x).ok()?;
        let total: f64 = thetas
            .iter()
            .zip(&self.responses)
            .map(|(&t, &y)| {
                let m = y + c * (self.family.mean(t) - y);
                self.family.b(t) - y * t + self.family.b_conjugate(m)
            })
            .sum();
        Some(total / self.family.alpha())
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }
}
