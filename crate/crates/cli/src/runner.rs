//! Monte Carlo replicates.
//!
//! Random streams come from ChaCha20 keyed by the master seed: replicate `i`
//! uses stream `i`, the true parameter stream `u64::MAX` and the shared design
//! stream `u64::MAX - 1`. Results therefore do not depend on scheduling.

use std::path::Path;
use std::time::Instant;

use mrle_core::calibration::{
    calibrate_graphical, calibrate_logistic, calibrate_tensor_regression, NoiseScale,
};
use mrle_core::models::{
    GlmDesign, GlmFamily, GlmTensorModel, GraphicalModel, ModeCovariance, TensorRegressionDesign,
    TensorRegressionModel,
};
use mrle_core::{fit, fit_graphical_lasso, FitResult, GaugeSpec, SolverSettings, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::config::{DesignSpec, ExperimentConfig, Family, RPolicy};
use crate::design::{load_design_csv, normalized_gaussian};
use crate::error::{HarnessError, Result};
use crate::report::{aggregate, ReplicateRecord, SimulationReport};
use crate::truth::generate_truth;

const TRUTH_STREAM: u64 = u64::MAX;
const DESIGN_STREAM: u64 = u64::MAX - 1;

/// Generator for one named stream of the master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `d <= r * sym_size + delta + 1e-9`.
pub fn check_oracle_bound(d: f64, r: f64, sym_size: f64, delta: f64) -> bool {
    d <= mrle_core::oracle_bound(r, sym_size, delta)
}

/// A model with its true parameter, ready to sample.
#[derive(Debug, Clone)]
pub enum ModelInstance {
    TensorRegression(TensorRegressionModel),
    Glm(GlmTensorModel),
    Graphical(GraphicalModel),
}

/// Everything shared across replicates of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    truth: Tensor,
    gauge: GaugeSpec,
    settings: SolverSettings,
    covariances: Vec<ModeCovariance>,
    shared_design: Option<Tensor>,
    symmetrized_size: f64,
}

fn runtime(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

impl Experiment {
    /// Validates the config and draws the true parameter and any shared design.
    pub fn new(config: ExperimentConfig, base_dir: &Path) -> Result<Self> {
        config.validate(base_dir)?;
        let truth = generate_truth(&config, &mut stream_rng(config.seed, TRUTH_STREAM))?;
        let gauge = config.gauge()?;
        let covariances = match config.family {
            Family::TensorRegression => config.covariances()?,
            _ => Vec::new(),
        };
        let shared_design = match &config.design {
            _ if config.family == Family::Graphical => None,
            DesignSpec::FixedNormalized {} => Some(normalized_gaussian(
                config.n,
                config.design_width(),
                &mut stream_rng(config.seed, DESIGN_STREAM),
            )?),
            DesignSpec::RandomNormalized {} => None,
            DesignSpec::File { path } => Some(load_design_csv(&base_dir.join(path))?),
        };
        let symmetrized_size = gauge.symmetrized_size(&truth).map_err(runtime)?;
        let settings = config.solver_settings();
        let experiment = Self {
            config,
            truth,
            gauge,
            settings,
            covariances,
            shared_design,
            symmetrized_size,
        };
        // fail fast on models that cannot be built
        experiment.model(&mut stream_rng(experiment.config.seed, 0))?;
        Ok(experiment)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn truth(&self) -> &Tensor {
        &self.truth
    }

    pub fn gauge(&self) -> &GaugeSpec {
        &self.gauge
    }

    /// `u(L*) + u(-L*)`.
    pub fn symmetrized_size(&self) -> f64 {
        self.symmetrized_size
    }

    /// Builds the model for one replicate, drawing a fresh design from `rng`
    /// when the design is not shared.
    pub fn model(&self, rng: &mut ChaCha20Rng) -> Result<ModelInstance> {
        let cfg = &self.config;
        let mut z = || -> Result<Tensor> {
            match &self.shared_design {
                Some(z) => Ok(z.clone()),
                None => normalized_gaussian(cfg.n, cfg.design_width(), rng),
            }
        };
        let model = match cfg.family {
            Family::TensorRegression => {
                let design = TensorRegressionDesign::new(z()?, self.covariances.clone(), &cfg.param_dims())
                    .map_err(runtime)?;
                ModelInstance::TensorRegression(TensorRegressionModel::new(self.truth.clone(), design).map_err(runtime)?)
            }
            Family::GlmLogistic | Family::GlmGaussian => {
                let family = match cfg.noise.sigma2 {
                    Some(s) => GlmFamily::gaussian(s).map_err(runtime)?,
                    None => GlmFamily::Logistic,
                };
                let design = GlmDesign::from_matrix(z()?, &cfg.param_dims()).map_err(runtime)?;
                ModelInstance::Glm(GlmTensorModel::new(self.truth.clone(), design, family).map_err(runtime)?)
            }
            Family::Graphical => ModelInstance::Graphical(GraphicalModel::new(self.truth.clone()).map_err(runtime)?),
        };
        Ok(model)
    }

    /// Runs replicate `index` on its own stream. Failures are recorded, not
    /// returned.
    pub fn run_replicate(&self, index: usize) -> ReplicateRecord {
        let start = Instant::now();
        let mut record = ReplicateRecord::empty(index, self.config.family.as_str());
        if let Err(e) = self.fill_record(index, &mut record) {
            record.error = Some(e.to_string());
        }
        if self.config.timing {
            record.seconds = start.elapsed().as_secs_f64();
        }
        record
    }

    fn fill_record(&self, index: usize, rec: &mut ReplicateRecord) -> Result<()> {
        let mut rng = stream_rng(self.config.seed, index as u64);
        let model = self.model(&mut rng)?;
        let calibrated_t = match self.config.r_policy {
            RPolicy::Calibrated { t } => Some(t),
            _ => None,
        };
        let init = Tensor::zeros(&self.config.param_dims()).map_err(runtime)?;

        // sample, noise dual, calibrated threshold on the matching scale
        let (noise_dual, r0, fit_at): (f64, Option<f64>, Box<dyn Fn(f64) -> Result<(FitResult, f64)>>) = match &model {
            ModelInstance::TensorRegression(m) => {
                let data = m.sample(&mut rng).map_err(runtime)?;
                let noise = m.noise_term(&data).map_err(runtime)?;
                let r0 = calibrated_t
                    .map(|t| calibrate_tensor_regression(m, &self.gauge, t).map(|c| c.threshold(NoiseScale::Sum)))
                    .transpose()
                    .map_err(runtime)?;
                let objective = m.objective(&data).map_err(runtime)?;
                let m = m.clone();
                let gauge = self.gauge.clone();
                let init = init.clone();
                let settings = self.settings.clone();
                (
                    self.gauge.dual_evaluate(&noise).map_err(runtime)?,
                    r0,
                    Box::new(move |r| {
                        let f = fit(&objective, &gauge, r, &init, &settings).map_err(runtime)?;
                        let kl = m.kl_loss(&f.estimate).map_err(runtime)?;
                        Ok((f, kl))
                    }),
                )
            }
            ModelInstance::Glm(m) => {
                let data = m.sample(&mut rng).map_err(runtime)?;
                let noise = m.noise_term(&data).map_err(runtime)?;
                let r0 = calibrated_t
                    .map(|t| calibrate_logistic(m, &self.gauge, t).map(|c| c.threshold(NoiseScale::Sum)))
                    .transpose()
                    .map_err(runtime)?;
                let objective = m.objective(&data).map_err(runtime)?;
                let m = m.clone();
                let gauge = self.gauge.clone();
                let init = init.clone();
                let settings = self.settings.clone();
                (
                    self.gauge.dual_evaluate(&noise).map_err(runtime)?,
                    r0,
                    Box::new(move |r| {
                        let f = fit(&objective, &gauge, r, &init, &settings).map_err(runtime)?;
                        let kl = m.kl_loss(&f.estimate).map_err(runtime)?;
                        Ok((f, kl))
                    }),
                )
            }
            ModelInstance::Graphical(m) => {
                // Fitted on the per-sample scale `<S, L> - log det L + r' |L|_1`,
                // whose noise term is `Sigma* - S` and whose divergence is
                // Stein's loss.
                let data = m.sample(self.config.n, &mut rng).map_err(runtime)?;
                let noise = m.noise_matrix(&data).map_err(runtime)?;
                let r0 = calibrated_t
                    .map(|t| calibrate_graphical(m, self.config.n, t).map(|c| c.threshold(NoiseScale::PerSample)))
                    .transpose()
                    .map_err(runtime)?;
                let s = data.second_moment().map_err(runtime)?;
                let m = m.clone();
                let settings = self.settings.clone();
                (
                    self.gauge.dual_evaluate(&noise).map_err(runtime)?,
                    r0,
                    Box::new(move |r| {
                        let f = fit_graphical_lasso(&s, r, &settings).map_err(runtime)?;
                        let kl = m.stein_loss(&f.estimate).map_err(runtime)?;
                        Ok((f, kl))
                    }),
                )
            }
        };
        rec.noise_dual = Some(noise_dual);
        rec.r0 = r0;
        let r = match self.config.r_policy {
            RPolicy::Calibrated { .. } => r0.expect("calibrated threshold"),
            RPolicy::EmpiricalMargin { m } => m * noise_dual,
            RPolicy::Fixed { value } => value,
        };
        rec.r = Some(r);
        rec.r_condition = Some(r >= noise_dual);

        let (f, kl) = fit_at(r)?;
        rec.iterations = Some(f.iterations);
        rec.converged = Some(f.converged);
        if !f.gap.is_finite() {
            return Err(HarnessError::Runtime("no finite certified gap for the fit".into()));
        }
        let bound = r * self.symmetrized_size;
        rec.kl_loss = Some(kl);
        rec.bound_value = Some(bound);
        rec.solver_gap = Some(f.gap);
        rec.bound_ok = Some(check_oracle_bound(kl, r, self.symmetrized_size, f.gap));
        Ok(())
    }

    /// All replicates on a pool of `config.workers` threads, in index order.
    pub fn run(&self) -> Result<SimulationReport> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(runtime)?;
        let records: Vec<ReplicateRecord> =
            pool.install(|| (0..self.config.replicates).into_par_iter().map(|i| self.run_replicate(i)).collect());
        let aggregates = aggregate(&records, &self.config)?;
        Ok(SimulationReport::new(self.config.clone(), records, aggregates))
    }
}
