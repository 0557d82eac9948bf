use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::protocols::ProtocolSetup;
use crate::controls::FilterBank;
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct EigenDiagnostics {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub condition: f64,
    pub numerical_rank: usize,
    pub eigenvalues: Vec<f64>,
}

impl EigenDiagnostics {
    pub fn of(bank: &FilterBank) -> Self {
        let values = bank.eigen().values.clone();
        let lambda_max = values[0];
        let lambda_min = values[values.len() - 1];
        Self {
            lambda_max,
            lambda_min,
            condition: if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY },
            numerical_rank: bank.eigen().rank(crate::estimator::SINGULAR_THRESHOLD),
            eigenvalues: values,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolSummary {
    #[serde(flatten)]
    pub setup: ProtocolSetup,
    pub n_filters: usize,
    pub taus_s: Vec<f64>,
    pub gramian: EigenDiagnostics,
}

impl ProtocolSummary {
    pub fn new(setup: &ProtocolSetup, bank: &FilterBank) -> Self {
        Self {
            setup: setup.clone(),
            n_filters: bank.len(),
            taus_s: bank.sequences().iter().map(|s| s.tau()).collect(),
            gramian: EigenDiagnostics::of(bank),
        }
    }
}

/// Scores of one (protocol, method, setting) cell over its repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub protocol: String,
    pub method: String,
    pub n_filters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_rad_s: Option<f64>,
    pub fidelity: Vec<f64>,
    pub mse: Vec<f64>,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub mse_mean: f64,
    pub mse_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_rank: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// Mean and sample standard deviation; `(NaN, NaN)` when empty.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl CellReport {
    pub fn new(protocol: &str, method: &str, n_filters: usize) -> Self {
        Self {
            protocol: protocol.to_string(),
            method: method.to_string(),
            n_filters,
            samples: None,
            nu_rad_s: None,
            fidelity: Vec::new(),
            mse: Vec::new(),
            fidelity_mean: f64::NAN,
            fidelity_std: f64::NAN,
            mse_mean: f64::NAN,
            mse_std: f64::NAN,
            effective_rank: None,
            errors: Vec::new(),
        }
    }

    /// Recomputes aggregates from the stored per-repetition values.
    pub fn finish(mut self) -> Self {
        (self.fidelity_mean, self.fidelity_std) = mean_std(&self.fidelity);
        (self.mse_mean, self.mse_std) = mean_std(&self.mse);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub wall_clock_s: f64,
    /// `key = value` pairs exactly as read from the config file.
    pub config: BTreeMap<String, String>,
    /// Fully resolved settings, defaults included.
    pub settings: serde_json::Value,
    pub notes: Vec<String>,
    pub protocols: Vec<ProtocolSummary>,
    pub cells: Vec<CellReport>,
    pub failures: usize,
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
