//! The JSON run artifact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineResult;
use crate::config::RunConfig;
use crate::data::StandardizationInfo;
use crate::error::{DfiError, Result};
use crate::importance::inference::{infer, InferenceSettings};
use crate::transport::LinearTransport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEstimate {
    pub name: String,
    pub estimate: f64,
    #[serde(rename = "se")]
    pub std_error: f64,
    /// Two-sided interval `[low, high]`.
    pub ci: [f64; 2],
    #[serde(rename = "z")]
    pub z_score: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    #[serde(rename = "influence", default)]
    pub influence_values: Vec<f64>,
}

impl ImportanceEstimate {
    /// Runs inference on `influence_values` and packages the result.
    pub fn from_influence(
        name: impl Into<String>,
        estimate: f64,
        influence_values: Vec<f64>,
        settings: InferenceSettings,
    ) -> Result<Self> {
        let inf = infer(estimate, &influence_values, settings)?;
        Ok(ImportanceEstimate {
            name: name.into(),
            estimate,
            std_error: inf.std_error,
            ci: [inf.ci_low, inf.ci_high],
            z_score: inf.z_score,
            p_value: inf.p_value,
            influence_values,
        })
    }

    pub fn ci_low(&self) -> f64 {
        self.ci[0]
    }

    pub fn ci_high(&self) -> f64 {
        self.ci[1]
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci[0] <= value && value <= self.ci[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub latent: f64,
    pub attributed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub config: RunConfig,
    pub latent: Vec<ImportanceEstimate>,
    pub attributed: Vec<ImportanceEstimate>,
    pub groups: Option<Vec<ImportanceEstimate>>,
    pub totals: Totals,
    /// Diagonal of the covariance behind the transport, averaged over folds.
    pub sigma_diag: Vec<f64>,
    /// Row sums of the attribution weights, averaged over folds. Equal to
    /// `sigma_diag` for the symmetric map.
    pub latent_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<StandardizationInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Vec<BaselineResult>>,
    /// One fitted transport per fold, kept on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transports: Option<Vec<LinearTransport>>,
}

impl ImportanceReport {
    pub fn d(&self) -> usize {
        self.attributed.len()
    }

    /// `|Σ_j w_j·φ̂_Zj − Σ_l φ̂_Xl|` relative to the larger magnitude of the
    /// two sides (absolute when both are below 1).
    pub fn decomposition_gap(&self) -> f64 {
        let lhs: f64 = self
            .latent_weights
            .iter()
            .zip(&self.latent)
            .map(|(w, e)| w * e.estimate)
            .sum();
        let rhs: f64 = self.attributed.iter().map(|e| e.estimate).sum();
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
    }

    /// Same identity with the reported covariance diagonal as weights.
    pub fn sigma_decomposition_gap(&self) -> f64 {
        let lhs: f64 = self
            .sigma_diag
            .iter()
            .zip(&self.latent)
            .map(|(w, e)| w * e.estimate)
            .sum();
        let rhs: f64 = self.attributed.iter().map(|e| e.estimate).sum();
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DfiError::InvalidDataset(format!("cannot encode report: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DfiError::json(text, e))
    }
}

pub fn write_report(report: &ImportanceReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = report.to_json()?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| DfiError::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ImportanceReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DfiError::io(path, e))?;
    ImportanceReport::from_json(&text)
}
