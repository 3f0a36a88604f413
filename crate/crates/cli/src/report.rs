//! Per-replicate records, aggregates and the serialized report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Family, RPolicy};
use crate::error::{HarnessError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 10] = [
    "replicate",
    "family",
    "noise_dual",
    "r",
    "kl_loss",
    "bound_value",
    "solver_gap",
    "r_condition",
    "bound_ok",
    "seconds",
];

/// One replicate. Fields stay `None` past the point where a failed replicate
/// stopped; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub family: String,
    /// Dual gauge of the noise term.
    pub noise_dual: Option<f64>,
    pub r: Option<f64>,
    /// Calibrated threshold on the same scale as `noise_dual`.
    pub r0: Option<f64>,
    pub kl_loss: Option<f64>,
    /// `r (u(L*) + u(-L*))`.
    pub bound_value: Option<f64>,
    /// Certified suboptimality of the fit.
    pub solver_gap: Option<f64>,
    /// `r >= noise_dual`.
    pub r_condition: Option<bool>,
    /// `kl_loss <= bound_value + solver_gap + 1e-9`.
    pub bound_ok: Option<bool>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl ReplicateRecord {
    pub fn empty(replicate: usize, family: &str) -> Self {
        Self {
            replicate,
            family: family.to_string(),
            noise_dual: None,
            r: None,
            r0: None,
            kl_loss: None,
            bound_value: None,
            solver_gap: None,
            r_condition: None,
            bound_ok: None,
            iterations: None,
            converged: None,
            seconds: 0.0,
            error: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    /// An oracle-bound violation: the r-condition holds but the bound fails.
    pub fn is_violation(&self) -> bool {
        self.succeeded() && self.r_condition == Some(true) && self.bound_ok == Some(false)
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Report(format!("replicate {}: {msg}", self.replicate)));
        let scalars = [self.noise_dual, self.r, self.r0, self.kl_loss, self.bound_value, self.solver_gap];
        if scalars.iter().flatten().chain([&self.seconds]).any(|v| !v.is_finite()) {
            return bad("non-finite scalar");
        }
        if !self.succeeded() {
            return Ok(());
        }
        let (Some(nd), Some(r), Some(kl), Some(bound), Some(gap), Some(rc), Some(ok)) = (
            self.noise_dual,
            self.r,
            self.kl_loss,
            self.bound_value,
            self.solver_gap,
            self.r_condition,
            self.bound_ok,
        ) else {
            return bad("successful record with missing fields");
        };
        if rc != (r >= nd) {
            return bad("r_condition disagrees with r and noise_dual");
        }
        if ok != (kl <= bound + gap + 1e-9) {
            return bad("bound_ok disagrees with kl_loss, bound_value and solver_gap");
        }
        if gap < 0.0 {
            return bad("negative solver_gap");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coverage {
    /// Fraction of replicates with `noise_dual <= r0`.
    pub empirical: f64,
    pub guaranteed: f64,
    /// Binomial standard error at the guaranteed level.
    pub standard_error: f64,
    /// `guaranteed - 3 standard_error`.
    pub threshold: f64,
    pub pass: bool,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregates {
    pub replicates: usize,
    pub succeeded: usize,
    pub failed: usize,
    /// Successful replicates with `r >= noise_dual`.
    pub oracle_checked: usize,
    pub oracle_passed: usize,
    /// `oracle_passed / oracle_checked`, absent when nothing was checked.
    pub oracle_pass_rate: Option<f64>,
    /// Indices of replicates that violate the oracle bound.
    pub violations: Vec<usize>,
    pub coverage: Option<Coverage>,
    pub kl_mean: f64,
    pub kl_median: f64,
    pub total_seconds: f64,
    pub failures: Vec<Failure>,
}

/// Guaranteed probability that the calibrated threshold dominates the noise.
pub fn guaranteed_coverage(family: Family, t: f64) -> f64 {
    let k = if family == Family::Graphical { 4.0 } else { 2.0 };
    (1.0 - k * (-t * t).exp()).max(0.0)
}

/// Aggregates as a pure function of the index-sorted records.
pub fn aggregate(records: &[ReplicateRecord], config: &ExperimentConfig) -> Result<Aggregates> {
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.succeeded()).collect();
    if ok.is_empty() {
        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(HarnessError::Runtime(format!(
            "all {} replicates failed; first error: {first}",
            records.len()
        )));
    }
    let checked: Vec<&&ReplicateRecord> = ok.iter().filter(|r| r.r_condition == Some(true)).collect();
    let passed = checked.iter().filter(|r| r.bound_ok == Some(true)).count();
    let violations = records.iter().filter(|r| r.is_violation()).map(|r| r.replicate).collect();

    let coverage = match config.r_policy {
        RPolicy::Calibrated { t } => {
            let hits: Vec<bool> = records
                .iter()
                .filter_map(|r| Some(r.noise_dual? <= r.r0?))
                .collect();
            (!hits.is_empty()).then(|| {
                let guaranteed = guaranteed_coverage(config.family, t);
                let m = hits.len() as f64;
                let se = (guaranteed * (1.0 - guaranteed) / m).sqrt();
                let empirical = hits.iter().filter(|h| **h).count() as f64 / m;
                Coverage {
                    empirical,
                    guaranteed,
                    standard_error: se,
                    threshold: guaranteed - 3.0 * se,
                    pass: empirical >= guaranteed - 3.0 * se,
                    replicates: hits.len(),
                }
            })
        }
        _ => None,
    };

    let mut kl: Vec<f64> = ok.iter().filter_map(|r| r.kl_loss).collect();
    let kl_mean = kl.iter().sum::<f64>() / kl.len() as f64;
    kl.sort_by(f64::total_cmp);
    let mid = kl.len() / 2;
    let kl_median = if kl.len() % 2 == 1 {
        kl[mid]
    } else {
        0.5 * (kl[mid - 1] + kl[mid])
    };

    Ok(Aggregates {
        replicates: records.len(),
        succeeded: ok.len(),
        failed: records.len() - ok.len(),
        oracle_checked: checked.len(),
        oracle_passed: passed,
        oracle_pass_rate: (!checked.is_empty()).then(|| passed as f64 / checked.len() as f64),
        violations,
        coverage,
        kl_mean,
        kl_median,
        total_seconds: records.iter().map(|r| r.seconds).sum(),
        failures: records
            .iter()
            .filter_map(|r| {
                r.error.as_ref().map(|e| Failure {
                    replicate: r.replicate,
                    error: e.clone(),
                })
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub generator: String,
    pub config: ExperimentConfig,
    pub records: Vec<ReplicateRecord>,
    pub aggregates: Aggregates,
}

impl SimulationReport {
    pub fn new(config: ExperimentConfig, records: Vec<ReplicateRecord>, aggregates: Aggregates) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            generator: format!("mrle {}", env!("CARGO_PKG_VERSION")),
            config,
            records,
            aggregates,
        }
    }

    pub fn has_violations(&self) -> bool {
        !self.aggregates.violations.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| HarnessError::Report(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let flag = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| HarnessError::Report(e.to_string());
        w.write_record(CSV_HEADER).map_err(err)?;
        for r in &self.records {
            w.write_record([
                r.replicate.to_string(),
                r.family.clone(),
                opt(r.noise_dual),
                opt(r.r),
                opt(r.kl_loss),
                opt(r.bound_value),
                opt(r.solver_gap),
                flag(r.r_condition),
                flag(r.bound_ok),
                r.seconds.to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Report(e.to_string()))
    }
}

/// Parses a report and verifies it: schema version, record consistency,
/// index order and aggregates recomputed bit-for-bit from the records.
pub fn parse_report(text: &str) -> Result<SimulationReport> {
    let report: SimulationReport = serde_json::from_str(text).map_err(|e| HarnessError::Report(e.to_string()))?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(HarnessError::Report(format!(
            "unsupported schema_version {}",
            report.schema_version
        )));
    }
    for (i, r) in report.records.iter().enumerate() {
        if r.replicate != i {
            return Err(HarnessError::Report(format!("record {i} has replicate index {}", r.replicate)));
        }
        r.check()?;
    }
    let recomputed = aggregate(&report.records, &report.config)?;
    if recomputed != report.aggregates {
        return Err(HarnessError::Report("aggregates do not match the records".into()));
    }
    Ok(report)
}

pub fn load_report(path: &Path) -> Result<SimulationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_report(&text)
}
