//! Disentangled feature importance: correlated features are mapped to
//! independent latent coordinates by a linear transport, importance is
//! estimated per coordinate by resampling, and then attributed back to the
//! original features through the squared entries of the map.

pub mod baselines;
pub mod config;
pub mod data;
pub mod error;
pub mod importance;
pub mod regression;
pub mod report;
pub mod simulation;
pub mod transport;

pub use config::{CovarianceSource, EtaFit, LatentEstimator, RunConfig};
pub use data::{load_csv, read_csv, standardize, Dataset, Rows, StandardizationInfo};
pub use error::{DfiError, Result};
pub use importance::{run_dfi, run_dfi_with, RunOptions};
pub use regression::{FittedRegressor, OracleFn, RegressorConfig, RegressorKind};
pub use report::{read_report, write_report, ImportanceEstimate, ImportanceReport, Totals};
pub use transport::{AttributionWeights, LinearTransport, TransportKind};
