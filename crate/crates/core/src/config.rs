use serde::{Deserialize, Serialize};

use crate::error::{DfiError, Result};
use crate::regression::RegressorConfig;
use crate::transport::TransportKind;

/// How the m replacement draws are combined in the latent estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LatentEstimator {
    /// Average the m predictions first, then compare losses.
    #[default]
    Loco,
    /// Half the average loss gap over the m swapped copies.
    Cpi,
}

/// How the latent-space regression is obtained on the nuisance fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaFit {
    /// Fit directly on `(Z, Y)`.
    #[default]
    Direct,
    /// Fit on `(X, Y)` and read through the inverse transport.
    Compose,
}

/// Source of the covariance behind the transport map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum CovarianceSource {
    /// Sample covariance of the nuisance fold.
    #[default]
    Estimate,
    /// A fixed, known covariance (row-major `d × d`).
    Known { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_folds: usize,
    pub m_resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub transport_kind: TransportKind,
    pub regressor: RegressorConfig,
    pub inflate_near_null: bool,
    #[serde(default)]
    pub estimator: LatentEstimator,
    #[serde(default)]
    pub eta_fit: EtaFit,
    /// Use every value of the evaluation column instead of m random draws.
    #[serde(default)]
    pub full_support: bool,
    #[serde(default)]
    pub covariance: CovarianceSource,
    #[serde(default)]
    pub eigen_floor: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_folds: 2,
            m_resamples: 50,
            alpha: 0.1,
            seed: 0,
            transport_kind: TransportKind::BuresWasserstein,
            regressor: RegressorConfig::default(),
            inflate_near_null: true,
            estimator: LatentEstimator::Loco,
            eta_fit: EtaFit::Direct,
            full_support: false,
            covariance: CovarianceSource::Estimate,
            eigen_floor: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(DfiError::InvalidConfig(format!("n_folds must be >= 2, got {}", self.n_folds)));
        }
        if self.m_resamples < 1 {
            return Err(DfiError::InvalidConfig("m_resamples must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DfiError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.inflate_near_null && self.alpha >= 0.5 {
            // z_{1-α} ≤ 0 leaves the inflation term undefined
            return Err(DfiError::InvalidConfig(format!(
                "near-null inflation needs alpha < 0.5, got {}",
                self.alpha
            )));
        }
        if let Some(eps) = self.eigen_floor {
            if !(eps > 0.0) {
                return Err(DfiError::InvalidConfig(format!("eigen_floor must be positive, got {eps}")));
            }
        }
        self.regressor.validate()
    }
}
