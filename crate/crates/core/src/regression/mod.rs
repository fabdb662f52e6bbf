//! Nuisance regression: random forest, Nadaraya-Watson smoother, closed-form
//! oracles, and the fold splitter used for cross-fitting.

mod folds;
mod forest;
mod kernel;
mod oracle;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Rows;
use crate::error::{DfiError, Result};

pub use folds::{split_folds, FoldAssignment};
pub use oracle::OracleFn;

use forest::{Forest, ForestParams};
use kernel::KernelSmoother;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    #[default]
    RandomForest,
    KernelSmoother,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub kind: RegressorKind,
    pub n_trees: usize,
    pub min_leaf: usize,
    pub max_features: f64,
    /// Kernel bandwidth; `None` picks a Scott-type rule from the data.
    pub bandwidth: Option<f64>,
    pub oracle_fn: Option<OracleFn>,
    pub seed: u64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            kind: RegressorKind::RandomForest,
            n_trees: 500,
            min_leaf: 5,
            max_features: 1.0 / 3.0,
            bandwidth: None,
            oracle_fn: None,
            seed: 0,
        }
    }
}

impl RegressorConfig {
    pub fn forest() -> Self {
        Self::default()
    }

    pub fn kernel(bandwidth: Option<f64>) -> Self {
        RegressorConfig {
            kind: RegressorKind::KernelSmoother,
            bandwidth,
            ..Self::default()
        }
    }

    pub fn oracle(f: OracleFn) -> Self {
        RegressorConfig {
            kind: RegressorKind::Oracle,
            oracle_fn: Some(f),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            RegressorKind::RandomForest => {
                if self.n_trees == 0 {
                    return Err(DfiError::InvalidConfig("n_trees must be at least 1".into()));
                }
                if self.min_leaf == 0 {
                    return Err(DfiError::InvalidConfig("min_leaf must be at least 1".into()));
                }
                if !(self.max_features > 0.0 && self.max_features <= 1.0) {
                    return Err(DfiError::InvalidConfig(format!(
                        "max_features must lie in (0, 1], got {}",
                        self.max_features
                    )));
                }
            }
            RegressorKind::KernelSmoother => {
                if let Some(h) = self.bandwidth {
                    if !(h > 0.0 && h.is_finite()) {
                        return Err(DfiError::InvalidConfig(format!("bandwidth must be positive, got {h}")));
                    }
                }
            }
            RegressorKind::Oracle => {
                if self.oracle_fn.is_none() {
                    return Err(DfiError::InvalidConfig("oracle regressor needs oracle_fn".into()));
                }
            }
        }
        Ok(())
    }
}

type RowFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Model {
    Forest(Forest),
    Kernel(KernelSmoother),
    Oracle(OracleFn),
    Function(RowFn),
    /// `inner(L·z)`: a raw-space model read through the inverse transport.
    Composed { inner: Box<FittedRegressor>, l: DMatrix<f64> },
}

/// A trained predictor. Immutable and shareable across threads.
#[derive(Clone)]
pub struct FittedRegressor {
    d_in: usize,
    training_n: usize,
    model: Model,
}

impl fmt::Debug for FittedRegressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.model {
            Model::Forest(_) => "forest",
            Model::Kernel(_) => "kernel",
            Model::Oracle(o) => o.name(),
            Model::Function(_) => "function",
            Model::Composed { .. } => "composed",
        };
        f.debug_struct("FittedRegressor")
            .field("kind", &kind)
            .field("d_in", &self.d_in)
            .field("training_n", &self.training_n)
            .finish()
    }
}

/// Trains a regressor on `(x, y)`.
pub fn fit(config: &RegressorConfig, x: &Rows, y: &[f64]) -> Result<FittedRegressor> {
    config.validate()?;
    let n = x.n_rows();
    if n == 0 {
        return Err(DfiError::InvalidDataset("cannot fit on empty data".into()));
    }
    if y.len() != n {
        return Err(DfiError::DimensionMismatch { expected: n, got: y.len() });
    }
    let d = x.width();
    let model = match config.kind {
        RegressorKind::RandomForest => {
            if n < 2 * config.min_leaf {
                return Err(DfiError::InvalidDataset(format!(
                    "forest needs at least {} rows for min_leaf {}, got {n}",
                    2 * config.min_leaf,
                    config.min_leaf
                )));
            }
            let columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
            Model::Forest(Forest::fit(
                &columns,
                y,
                ForestParams {
                    n_trees: config.n_trees,
                    min_leaf: config.min_leaf,
                    max_features: config.max_features,
                    seed: config.seed,
                },
            ))
        }
        RegressorKind::KernelSmoother => Model::Kernel(KernelSmoother::fit(x, y, config.bandwidth)),
        RegressorKind::Oracle => {
            let f = config.oracle_fn.expect("validated");
            if d < f.min_dim() {
                return Err(DfiError::DimensionMismatch { expected: f.min_dim(), got: d });
            }
            Model::Oracle(f)
        }
    };
    Ok(FittedRegressor {
        d_in: d,
        training_n: n,
        model,
    })
}

impl FittedRegressor {
    /// Wraps a closed-form function of `d_in` inputs.
    pub fn from_fn(d_in: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FittedRegressor {
            d_in,
            training_n: 0,
            model: Model::Function(Arc::new(f)),
        }
    }

    /// `z ↦ self(L·z)`.
    pub fn compose_linear(self, l: DMatrix<f64>) -> Result<Self> {
        if l.nrows() != self.d_in || l.ncols() != self.d_in {
            return Err(DfiError::DimensionMismatch {
                expected: self.d_in,
                got: l.nrows(),
            });
        }
        Ok(FittedRegressor {
            d_in: self.d_in,
            training_n: self.training_n,
            model: Model::Composed { inner: Box::new(self), l },
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn training_n(&self) -> usize {
        self.training_n
    }

    /// Prediction for one row; the caller guarantees the width.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.d_in);
        match &self.model {
            Model::Forest(f) => f.predict(row),
            Model::Kernel(k) => k.predict(row),
            Model::Oracle(o) => o.eval(row),
            Model::Function(f) => f(row),
            Model::Composed { inner, l } => {
                let x: Vec<f64> = (0..self.d_in)
                    .map(|a| (0..self.d_in).map(|b| l[(a, b)] * row[b]).sum())
                    .collect();
                inner.predict_row(&x)
            }
        }
    }

    pub fn predict(&self, rows: &Rows) -> Result<Vec<f64>> {
        if rows.width() != self.d_in {
            return Err(DfiError::DimensionMismatch {
                expected: self.d_in,
                got: rows.width(),
            });
        }
        Ok(rows.iter_rows().map(|r| self.predict_row(r)).collect())
    }

    /// Average prediction over copies of `row` with coordinate `j` set to
    /// each entry of `values`.
    pub fn mean_with_replaced(&self, row: &[f64], j: usize, values: &[f64]) -> f64 {
        if let Model::Forest(f) = &self.model {
            return f.mean_with_replaced(row, j, values);
        }
        let mut buf = row.to_vec();
        let mut sum = 0.0;
        for &v in values {
            buf[j] = v;
            sum += self.predict_row(&buf);
        }
        sum / values.len() as f64
    }
}
