//! Latent-coordinate importance by resampling one coordinate at a time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::LatentEstimator;
use crate::data::Rows;
use crate::error::{DfiError, Result};
use crate::regression::FittedRegressor;

/// Replacement values for the resampled coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resampling {
    /// `m` draws with replacement from the evaluation column, per row.
    Random { m: usize },
    /// Every value of the evaluation column, per row.
    FullSupport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentOptions {
    pub resampling: Resampling,
    pub estimator: LatentEstimator,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentImportanceResult {
    pub j: usize,
    pub phi_hat: f64,
    /// Estimated influence values, one per evaluation row, centered.
    pub influence_values: Vec<f64>,
    pub m_used: usize,
}

/// LOCO-type latent importance with `m` random replacement draws.
pub fn latent_importance(
    eta_hat: &FittedRegressor,
    z_eval: &Rows,
    y_eval: &[f64],
    j: usize,
    m: usize,
    seed: u64,
) -> Result<LatentImportanceResult> {
    let opts = LatentOptions {
        resampling: Resampling::Random { m },
        estimator: LatentEstimator::Loco,
        seed,
    };
    latent_importance_with(eta_hat, z_eval, y_eval, j, &opts, None)
}

/// General form. `base_predictions`, when given, must equal
/// `eta_hat.predict(z_eval)` and saves recomputing it for every `j`.
pub fn latent_importance_with(
    eta_hat: &FittedRegressor,
    z_eval: &Rows,
    y_eval: &[f64],
    j: usize,
    opts: &LatentOptions,
    base_predictions: Option<&[f64]>,
) -> Result<LatentImportanceResult> {
    let n = z_eval.n_rows();
    if n == 0 {
        return Err(DfiError::InvalidDataset("empty evaluation fold".into()));
    }
    if y_eval.len() != n {
        return Err(DfiError::DimensionMismatch { expected: n, got: y_eval.len() });
    }
    if z_eval.width() != eta_hat.d_in() {
        return Err(DfiError::DimensionMismatch {
            expected: eta_hat.d_in(),
            got: z_eval.width(),
        });
    }
    if j >= z_eval.width() {
        return Err(DfiError::InvalidConfig(format!("coordinate {j} out of range")));
    }
    let m_used = match opts.resampling {
        Resampling::Random { m } if m < 1 => {
            return Err(DfiError::InvalidConfig("m must be at least 1".into()));
        }
        Resampling::Random { m } => m,
        Resampling::FullSupport => n,
    };

    let owned;
    let base = match base_predictions {
        Some(p) => p,
        None => {
            owned = eta_hat.predict(z_eval)?;
            &owned
        }
    };

    let column = z_eval.column(j);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut draws = vec![0.0; m_used];
    let mut buf = vec![0.0; z_eval.width()];
    let mut kernel = Vec::with_capacity(n);

    for i in 0..n {
        let row = z_eval.row(i);
        let values: &[f64] = match opts.resampling {
            Resampling::Random { .. } => {
                for v in draws.iter_mut() {
                    *v = column[rng.random_range(0..n)];
                }
                &draws
            }
            Resampling::FullSupport => &column,
        };
        let resid = y_eval[i] - base[i];
        let k = match opts.estimator {
            LatentEstimator::Loco => {
                let delta = base[i] - eta_hat.mean_with_replaced(row, j, values);
                // (y - η̄)² - (y - η̂)² written without cancellation
                2.0 * resid * delta + delta * delta
            }
            LatentEstimator::Cpi => {
                buf.copy_from_slice(row);
                let mut acc = 0.0;
                for &v in values {
                    buf[j] = v;
                    let delta = base[i] - eta_hat.predict_row(&buf);
                    acc += 2.0 * resid * delta + delta * delta;
                }
                0.5 * acc / values.len() as f64
            }
        };
        kernel.push(k);
    }

    let phi_hat = kernel.iter().sum::<f64>() / n as f64;
    let influence_values = kernel.into_iter().map(|k| k - phi_hat).collect();
    Ok(LatentImportanceResult {
        j,
        phi_hat,
        influence_values,
        m_used,
    })
}
