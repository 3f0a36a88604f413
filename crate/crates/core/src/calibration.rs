//! Closed-form choices of the tuning parameter that dominate the dual norm
//! of the noise term with prescribed probability, together with checks of
//! the design assumptions they rely on.

use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;
use crate::models::{GlmFamily, GlmTensorModel, GraphicalModel, TensorRegressionModel};
use crate::tensor::Tensor;

/// Tolerance on the column normalization `sum_i (z_j^i)^2 / n = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;
/// Tolerance on constancy of the precision diagonals.
pub const DIAGONAL_TOLERANCE: f64 = 1e-8;

/// Which noise statistic a threshold is compared against: the sum over
/// observations or its per-observation average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScale {
    Sum,
    PerSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl AssumptionCheck {
    fn new(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target,
            tolerance,
            passed: (measured - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub r0: f64,
    pub t: f64,
    /// Probability with which the dual norm of the noise stays below `r0`.
    pub coverage: f64,
    pub scale: NoiseScale,
    /// Number of observations behind the noise statistic.
    pub n: usize,
    pub assumptions: Vec<AssumptionCheck>,
}

impl CalibrationResult {
    /// The threshold expressed on the requested scale.
    pub fn threshold(&self, scale: NoiseScale) -> f64 {
        match (self.scale, scale) {
            (NoiseScale::Sum, NoiseScale::PerSample) => self.r0 / self.n as f64,
            (NoiseScale::PerSample, NoiseScale::Sum) => self.r0 * self.n as f64,
            _ => self.r0,
        }
    }
}

/// Per-column check of `sum_i (z_j^i)^2 / n = 1` for an `n x b` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub tolerance: f64,
    pub columns: Vec<AssumptionCheck>,
}

impl DesignReport {
    pub fn passed(&self) -> bool {
        self.columns.iter().all(|c| c.passed)
    }

    /// The column furthest from normalization, if any fails.
    pub fn worst(&self) -> Option<&AssumptionCheck> {
        self.columns
            .iter()
            .filter(|c| !c.passed)
            .max_by(|a, b| {
                (a.measured - a.target)
                    .abs()
                    .total_cmp(&(b.measured - b.target).abs())
            })
    }
}

fn column_mean_squares(z: &Tensor) -> Result<Vec<f64>> {
    if z.order() != 2 || z.nrows() == 0 {
        return Err(Error::InvalidShape(format!(
            "design must be a non-empty matrix, got {:?}",
            z.dims()
        )));
    }
    let (n, b) = (z.nrows(), z.ncols());
    let mut sums = vec![0.0; b];
    for i in 0..n {
        for (s, v) in sums.iter_mut().zip(z.row(i)) {
            *s += v * v;
        }
    }
    Ok(sums.into_iter().map(|s| s / n as f64).collect())
}

/// Reports, never fails, on well-formed matrices. Malformed input yields an
/// empty failing report.
pub fn validate_design(z: &Tensor, tolerance: f64) -> DesignReport {
    let columns = match column_mean_squares(z) {
        Ok(ms) => ms
            .into_iter()
            .enumerate()
            .map(|(j, m)| AssumptionCheck::new(format!("column {j} mean square"), m, 1.0, tolerance))
            .collect(),
        Err(_) => vec![AssumptionCheck {
            name: "design shape".into(),
            measured: f64::NAN,
            target: 1.0,
            tolerance,
            passed: false,
        }],
    };
    DesignReport { tolerance, columns }
}

/// Rescales every column to unit mean square. Returns the rescaled matrix
/// and the factors each column was multiplied by.
pub fn normalize_columns(z: &Tensor) -> Result<(Tensor, Vec<f64>)> {
    let ms = column_mean_squares(z)?;
    if let Some(j) = ms.iter().position(|&m| m == 0.0) {
        return Err(Error::AssumptionViolated(format!(
            "column {j} is identically zero and cannot be normalized"
        )));
    }
    let factors: Vec<f64> = ms.iter().map(|m| 1.0 / m.sqrt()).collect();
    let b = z.ncols();
    let data = z
        .data()
        .iter()
        .enumerate()
        .map(|(k, v)| v * factors[k % b])
        .collect();
    Ok((Tensor::matrix(z.nrows(), b, data)?, factors))
}

fn require_l1(gauge: &GaugeSpec) -> Result<()> {
    if *gauge != GaugeSpec::L1 {
        return Err(Error::Unsupported(format!(
            "closed-form calibration is available only for the l1 gauge, got {}",
            gauge.name()
        )));
    }
    Ok(())
}

fn require_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("confidence parameter t = {t} must be positive")));
    }
    Ok(())
}

fn require_normalized(z: &Tensor) -> Result<DesignReport> {
    let report = validate_design(z, NORMALIZATION_TOLERANCE);
    if let Some(w) = report.worst() {
        return Err(Error::AssumptionViolated(format!(
            "design not normalized: {} = {} (tolerance {})",
            w.name, w.measured, NORMALIZATION_TOLERANCE
        )));
    }
    Ok(report)
}

/// `r0 = (prod_k h_k) sqrt(2 n (t^2 + log prod_j b_j))` where `h_k^2` is the
/// common diagonal of `Sigma_k^{-1}`. Coverage `1 - 2 exp(-t^2)`.
pub fn calibrate_tensor_regression(
    model: &TensorRegressionModel,
    gauge: &GaugeSpec,
    t: f64,
) -> Result<CalibrationResult> {
    require_l1(gauge)?;
    require_t(t)?;
    let design = model.design();
    let mut assumptions = require_normalized(design.z())?.columns;
    let mut h_product = 1.0;
    for (k, cov) in design.covariances().iter().enumerate() {
        let prec = cov.precision();
        let diag: Vec<f64> = (0..prec.nrows()).map(|i| prec.get(&[i, i])).collect();
        let h2 = diag[0];
        let spread = diag.iter().map(|d| (d - h2).abs()).fold(0.0, f64::max);
        let check = AssumptionCheck::new(
            format!("mode {} precision diagonal spread", k + 1),
            spread,
            0.0,
            DIAGONAL_TOLERANCE,
        );
        if !check.passed {
            return Err(Error::AssumptionViolated(format!(
                "precision diagonal of mode {} is not constant: spread {spread} (tolerance {DIAGONAL_TOLERANCE})",
                k + 1
            )));
        }
        assumptions.push(check);
        h_product *= h2.sqrt();
    }
    let n = design.n();
    let b: f64 = design.param_dims().iter().map(|&d| d as f64).product();
    let r0 = h_product * (2.0 * n as f64 * (t * t + b.ln())).sqrt();
    Ok(CalibrationResult {
        r0,
        t,
        coverage: (1.0 - 2.0 * (-t * t).exp()).max(0.0),
        scale: NoiseScale::Sum,
        n,
        assumptions,
    })
}

/// `r0 = sqrt((1 + 2 max_i p^i (1 - p^i)) / 3 * n (t^2 + log b_1))` with the
/// true success probabilities `p^i`. Coverage `1 - 2 exp(-t^2)`.
pub fn calibrate_logistic(model: &GlmTensorModel, gauge: &GaugeSpec, t: f64) -> Result<CalibrationResult> {
    require_l1(gauge)?;
    require_t(t)?;
    if model.family() != GlmFamily::Logistic {
        return Err(Error::Unsupported(format!(
            "logistic calibration applied to the {} family",
            model.family().name()
        )));
    }
    let dims = model.design().param_dims();
    if dims.len() != 1 {
        return Err(Error::Unsupported(format!(
            "logistic calibration needs an order-1 parameter, got order {}",
            dims.len()
        )));
    }
    let assumptions = require_normalized(model.design().matrix())?.columns;
    let max_var = model
        .true_thetas()
        .iter()
        .map(|&th| {
            let p = crate::models::sigmoid(th);
            p * (1.0 - p)
        })
        .fold(0.0, f64::max);
    let n = model.design().n();
    let r0 = ((1.0 + 2.0 * max_var) / 3.0 * n as f64 * (t * t + (dims[0] as f64).ln())).sqrt();
    Ok(CalibrationResult {
        r0,
        t,
        coverage: (1.0 - 2.0 * (-t * t).exp()).max(0.0),
        scale: NoiseScale::Sum,
        n,
        assumptions,
    })
}

/// Admissible interval `(0, sqrt(n/4 - log(p(p-1))))` for the graphical
/// calibration, or `None` when it is empty.
pub fn graphical_window(p: usize, n: usize) -> Option<(f64, f64)> {
    if p < 2 {
        return None;
    }
    let pairs = (p * (p - 1)) as f64;
    let upper_sq = n as f64 / 4.0 - pairs.ln();
    (upper_sq > 0.0).then(|| (0.0, upper_sq.sqrt()))
}

/// `r0 = 80 max_k Sigma*_kk sqrt(n (t^2 + log(p(p-1))))` on the summed scale;
/// divide by `n` for the per-sample statistic. Coverage `1 - 4 exp(-t^2)`.
pub fn calibrate_graphical(model: &GraphicalModel, n: usize, t: f64) -> Result<CalibrationResult> {
    require_t(t)?;
    let p = model.p();
    if p < 2 {
        return Err(Error::Unsupported("graphical calibration needs p >= 2".into()));
    }
    let (lo, hi) = graphical_window(p, n).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "n = {n} is too small for p = {p}: no admissible t"
        ))
    })?;
    if !(t > lo && t < hi) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} outside the admissible interval ({lo}, {hi})"
        )));
    }
    let cov = model.covariance();
    let max_diag = (0..p).map(|k| cov.get(&[k, k])).fold(f64::NEG_INFINITY, f64::max);
    let pairs = (p * (p - 1)) as f64;
    let r0 = 80.0 * max_diag * (n as f64 * (t * t + pairs.ln())).sqrt();
    Ok(CalibrationResult {
        r0,
        t,
        coverage: (1.0 - 4.0 * (-t * t).exp()).max(0.0),
        scale: NoiseScale::Sum,
        n,
        assumptions: vec![AssumptionCheck {
            name: "t inside admissible interval".into(),
            measured: t,
            target: hi,
            tolerance: 0.0,
            passed: true,
        }],
    })
}
