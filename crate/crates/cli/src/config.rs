//! Experiment configuration: a strict JSON document.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "family": "tensor-regression",
//!   "dims": [4, 3, 2],
//!   "n": 50,
//!   "replicates": 200,
//!   "seed": 7,
//!   "truth": { "sparsity": 4, "magnitude": 1.0 },
//!   "gauge": { "kind": "l1" },
//!   "r_policy": { "kind": "empirical-margin", "m": 1.0 }
//! }
//! ```
//!
//! Modes are 0-based. For the graphical family `dims` is `[p]`.

use std::path::{Path, PathBuf};

use mrle_core::calibration::{graphical_window, validate_design, NORMALIZATION_TOLERANCE};
use mrle_core::models::ModeCovariance;
use mrle_core::{GaugeSpec, SolverSettings, Tensor};
use serde::{Deserialize, Serialize};

use crate::design::load_design_csv;
use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    TensorRegression,
    GlmLogistic,
    GlmGaussian,
    Graphical,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::TensorRegression => "tensor-regression",
            Family::GlmLogistic => "glm-logistic",
            Family::GlmGaussian => "glm-gaussian",
            Family::Graphical => "graphical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    /// Number of nonzero entries (off-diagonal pairs for the graphical family).
    pub sparsity: usize,
    pub magnitude: f64,
    /// Added to the diagonal of the graphical precision matrix on top of its
    /// off-diagonal row sums.
    #[serde(default = "default_margin")]
    pub diagonal_margin: f64,
}

fn default_margin() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DesignSpec {
    /// One standard normal design with unit mean-square columns, shared by
    /// all replicates.
    FixedNormalized {},
    /// A fresh normalized design per replicate.
    RandomNormalized {},
    /// Comma-separated numeric rows, resolved relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovarianceSpec {
    Identity {},
    Equicorrelated {
        rho: f64,
        #[serde(default = "one")]
        variance: f64,
    },
    Ar1 {
        rho: f64,
    },
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec::FixedNormalized {}
    }
}

fn one() -> f64 {
    1.0
}

impl CovarianceSpec {
    pub fn build(&self, b: usize) -> mrle_core::Result<ModeCovariance> {
        match *self {
            CovarianceSpec::Identity {} => ModeCovariance::identity(b),
            CovarianceSpec::Equicorrelated { rho, variance } => ModeCovariance::equicorrelated(b, rho, variance),
            CovarianceSpec::Ar1 { rho } => ModeCovariance::ar1(b, rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// One entry per response mode (tensor regression); empty means identity.
    #[serde(default)]
    pub covariances: Vec<CovarianceSpec>,
    /// Response variance for the gaussian GLM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GaugeConfig {
    L1 {},
    /// Weights in row-major order, one per parameter entry.
    WeightedL1 { weights: Vec<f64> },
    FiberGroupL2 { mode: usize },
    SliceFrobenius { mode: usize },
    Lq { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RPolicy {
    /// Closed-form `r0(t)`.
    Calibrated { t: f64 },
    /// `r = m * dual(noise)` with `m >= 1`.
    EmpiricalMargin { m: f64 },
    Fixed { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub objective_tolerance: f64,
    #[serde(default = "one")]
    pub initial_step: f64,
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "yes")]
    pub accelerate: bool,
}

fn default_max_iterations() -> usize {
    SolverSettings::default().max_iterations
}
fn default_tolerance() -> f64 {
    SolverSettings::default().objective_tolerance
}
fn default_shrink() -> f64 {
    SolverSettings::default().shrink
}
fn yes() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            max_iterations: s.max_iterations,
            objective_tolerance: s.objective_tolerance,
            initial_step: s.initial_step,
            shrink: s.shrink,
            accelerate: s.accelerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub family: Family,
    pub dims: Vec<usize>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Execution detail that never changes results, so it is not echoed
    /// into reports.
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
    pub truth: TruthSpec,
    #[serde(default)]
    pub design: DesignSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub gauge: GaugeConfig,
    pub r_policy: RPolicy,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Record per-replicate wall-clock seconds. Off by default so that
    /// outputs are byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_workers() -> usize {
    1
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Reads a config file. Returns the config and the directory relative
    /// paths inside it resolve against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Shape of the unknown parameter.
    pub fn param_dims(&self) -> Vec<usize> {
        match self.family {
            Family::Graphical => vec![self.dims[0], self.dims[0]],
            _ => self.dims.clone(),
        }
    }

    pub fn param_len(&self) -> usize {
        self.param_dims().iter().product()
    }

    /// Number of design columns.
    pub fn design_width(&self) -> usize {
        match self.family {
            Family::TensorRegression => self.dims[0],
            _ => self.param_len(),
        }
    }

    pub fn gauge(&self) -> Result<GaugeSpec> {
        let g = match &self.gauge {
            GaugeConfig::L1 {} => GaugeSpec::L1,
            GaugeConfig::WeightedL1 { weights } => {
                let w = Tensor::new(&self.param_dims(), weights.clone())
                    .map_err(|e| config_err(format!("weighted-l1 weights: {e}")))?;
                GaugeSpec::weighted_l1(w).map_err(|e| config_err(e.to_string()))?
            }
            GaugeConfig::FiberGroupL2 { mode } => GaugeSpec::FiberGroupL2 { mode: *mode },
            GaugeConfig::SliceFrobenius { mode } => GaugeSpec::SliceFrobenius { mode: *mode },
            GaugeConfig::Lq { q } => GaugeSpec::lq(*q).map_err(|e| config_err(e.to_string()))?,
        };
        Ok(g)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            max_iterations: self.solver.max_iterations,
            objective_tolerance: self.solver.objective_tolerance,
            initial_step: self.solver.initial_step,
            shrink: self.solver.shrink,
            accelerate: self.solver.accelerate,
            record_trace: false,
        }
    }

    pub fn covariances(&self) -> Result<Vec<ModeCovariance>> {
        let response = &self.dims[1..];
        if self.noise.covariances.is_empty() {
            return response
                .iter()
                .map(|&b| ModeCovariance::identity(b).map_err(|e| config_err(e.to_string())))
                .collect();
        }
        if self.noise.covariances.len() != response.len() {
            return Err(config_err(format!(
                "noise.covariances needs {} entries (one per response mode), got {}",
                response.len(),
                self.noise.covariances.len()
            )));
        }
        self.noise
            .covariances
            .iter()
            .zip(response)
            .enumerate()
            .map(|(k, (spec, &b))| {
                spec.build(b)
                    .map_err(|e| config_err(format!("noise covariance for response mode {k}: {e}")))
            })
            .collect()
    }

    /// Full semantic validation. `base_dir` resolves a design file path.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(config_err("dims must be a non-empty list of positive integers"));
        }
        if self.n == 0 {
            return Err(config_err("n must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(config_err("replicates must be at least 1"));
        }
        if self.workers == 0 {
            return Err(config_err("workers must be at least 1"));
        }
        mrle_core::Shape::new(&self.param_dims()).map_err(|e| config_err(e.to_string()))?;
        if !(self.truth.magnitude > 0.0) || !self.truth.magnitude.is_finite() {
            return Err(config_err("truth.magnitude must be positive and finite"));
        }
        let capacity = match self.family {
            Family::Graphical => self.dims[0] * (self.dims[0] - 1) / 2,
            _ => self.param_len(),
        };
        if self.truth.sparsity > capacity {
            return Err(config_err(format!(
                "truth.sparsity {} exceeds the {capacity} available positions",
                self.truth.sparsity
            )));
        }
        self.solver_settings()
            .validate()
            .map_err(|e| config_err(format!("solver: {e}")))?;

        match self.family {
            Family::TensorRegression => {
                if self.dims.len() < 2 {
                    return Err(config_err(
                        "tensor-regression needs dims of length >= 2 (covariate mode plus response modes)",
                    ));
                }
                self.covariances()?;
            }
            Family::Graphical => {
                if self.dims.len() != 1 {
                    return Err(config_err("graphical dims must be [p]"));
                }
                if self.design != (DesignSpec::FixedNormalized {}) {
                    return Err(config_err("graphical experiments take no design"));
                }
                if !(self.truth.diagonal_margin > 0.0) || !self.truth.diagonal_margin.is_finite() {
                    return Err(config_err("truth.diagonal_margin must be positive"));
                }
            }
            Family::GlmLogistic | Family::GlmGaussian => {}
        }
        if self.family != Family::TensorRegression && !self.noise.covariances.is_empty() {
            return Err(config_err("noise.covariances applies only to tensor-regression"));
        }
        match (self.family, self.noise.sigma2) {
            (Family::GlmGaussian, Some(s)) if s > 0.0 && s.is_finite() => {}
            (Family::GlmGaussian, _) => {
                return Err(config_err("glm-gaussian needs a positive noise.sigma2"));
            }
            (_, Some(_)) => return Err(config_err("noise.sigma2 applies only to glm-gaussian")),
            _ => {}
        }

        let gauge = self.gauge()?;
        let probe = Tensor::zeros(&self.param_dims()).map_err(|e| config_err(e.to_string()))?;
        gauge
            .check_compatible(&probe)
            .map_err(|e| config_err(format!("gauge: {e}")))?;
        if !gauge.is_convex() {
            return Err(config_err(format!(
                "gauge {} is non-convex and cannot be fitted by the proximal solver",
                gauge.name()
            )));
        }
        if self.family == Family::Graphical && gauge != GaugeSpec::L1 {
            return Err(config_err("the graphical lasso uses the l1 gauge"));
        }

        match self.r_policy {
            RPolicy::EmpiricalMargin { m } => {
                if !(m >= 1.0) || !m.is_finite() {
                    return Err(config_err("empirical-margin needs m >= 1"));
                }
            }
            RPolicy::Fixed { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(config_err("fixed r must be finite and nonnegative"));
                }
            }
            RPolicy::Calibrated { t } => self.validate_calibrated(t, &gauge)?,
        }

        if let DesignSpec::File { path } = &self.design {
            let z = load_design_csv(&base_dir.join(path))?;
            if z.ncols() != self.design_width() || z.nrows() != self.n {
                return Err(config_err(format!(
                    "design file is {}x{}, expected {}x{}",
                    z.nrows(),
                    z.ncols(),
                    self.n,
                    self.design_width()
                )));
            }
            if matches!(self.r_policy, RPolicy::Calibrated { .. }) {
                if let Some(w) = validate_design(&z, NORMALIZATION_TOLERANCE).worst() {
                    return Err(config_err(format!(
                        "calibration needs a normalized design: {} = {}",
                        w.name, w.measured
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_calibrated(&self, t: f64, gauge: &GaugeSpec) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(config_err("calibrated policy needs t > 0"));
        }
        if *gauge != GaugeSpec::L1 {
            return Err(config_err("calibrated r is available only for the l1 gauge"));
        }
        match self.family {
            Family::TensorRegression => {
                for (k, cov) in self.covariances()?.iter().enumerate() {
                    let prec = cov.precision();
                    let h2 = prec.get(&[0, 0]);
                    let spread = (0..prec.nrows())
                        .map(|i| (prec.get(&[i, i]) - h2).abs())
                        .fold(0.0, f64::max);
                    if spread > mrle_core::calibration::DIAGONAL_TOLERANCE {
                        return Err(config_err(format!(
                            "calibration needs a constant precision diagonal; response mode {k} varies by {spread}"
                        )));
                    }
                }
            }
            Family::GlmLogistic => {
                if self.dims.len() != 1 {
                    return Err(config_err("calibrated logistic experiments need dims = [b1]"));
                }
            }
            Family::GlmGaussian => {
                return Err(config_err("no closed-form calibration exists for glm-gaussian"));
            }
            Family::Graphical => {
                let p = self.dims[0];
                match graphical_window(p, self.n) {
                    None => {
                        return Err(config_err(format!(
                            "graphical calibration needs p >= 2 and n large enough; no admissible t for p = {p}, n = {}",
                            self.n
                        )))
                    }
                    Some((lo, hi)) if !(t > lo && t < hi) => {
                        return Err(config_err(format!("t = {t} outside the admissible interval ({lo}, {hi})")));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}
