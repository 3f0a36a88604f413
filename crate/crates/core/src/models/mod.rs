//! Model families: samplers, exact Kullback-Leibler losses, noise terms and
//! the smooth negative log-likelihoods handed to the solver.
//!
//! Constant terms of the log-densities are dropped throughout; they cancel in
//! both the estimator and every loss.

mod glm;
mod graphical;
mod tensor_regression;

pub use glm::{GlmData, GlmDesign, GlmFamily, GlmObjective, GlmTensorModel};
pub use graphical::{GraphicalData, GraphicalModel, GraphicalObjective};
pub use tensor_regression::{
    ModeCovariance, TensorRegressionData, TensorRegressionDesign, TensorRegressionModel,
    TensorRegressionObjective,
};

/// A sample drawn from one of the model families.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    TensorRegression(TensorRegressionData),
    Glm(GlmData),
    Graphical(GraphicalData),
}

impl Dataset {
    pub fn family(&self) -> &'static str {
        match self {
            Dataset::TensorRegression(_) => "tensor-regression",
            Dataset::Glm(_) => "glm",
            Dataset::Graphical(_) => "graphical",
        }
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        match self {
            Dataset::TensorRegression(d) => d.responses.len(),
            Dataset::Glm(d) => d.responses.len(),
            Dataset::Graphical(d) => d.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Numerically stable `log(1 + e^x)`.
pub(crate) fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function `e^x / (1 + e^x)`.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
