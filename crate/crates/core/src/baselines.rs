//! Raw-space LOCO and CPI for comparison with the disentangled estimates.
//!
//! With an oracle regressor the submodel `μ₋j` is the Gaussian conditional
//! mean of `μ` given `X₋j` (Gauss-Hermite quadrature over `X_j | X₋j` under
//! the fold covariance) and the CPI sampler's `ν̂_j` is the least-squares
//! linear fit. Otherwise both are refits of the configured regressor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{Dataset, Rows};
use crate::error::{DfiError, Result};
use crate::importance::inference::InferenceSettings;
use crate::importance::pipeline::{fold_covariance, fold_seed, fold_splits, pool};
use crate::regression::{self, FittedRegressor, RegressorConfig, RegressorKind};
use crate::report::ImportanceEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Loco,
    Cpi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub estimates: Vec<ImportanceEstimate>,
}

const HERMITE_NODES: usize = 40;

/// Nodes and weights for `∫ f(t) e^{-t²} dt`, via the Jacobi matrix.
fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(k, k, |a, b| {
        if a + 1 == b || b + 1 == a {
            (a.max(b) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Linear conditional law of `X_j` given `X₋j` under a Gaussian model.
struct GaussianConditional {
    mean_j: f64,
    means_rest: Vec<f64>,
    coef: Vec<f64>,
    sd: f64,
}

impl GaussianConditional {
    fn new(sigma: &DMatrix<f64>, means: &[f64], j: usize) -> Result<Self> {
        let d = sigma.nrows();
        let rest: Vec<usize> = (0..d).filter(|&a| a != j).collect();
        let s_rr = DMatrix::from_fn(rest.len(), rest.len(), |a, b| sigma[(rest[a], rest[b])]);
        let s_rj = DVector::from_fn(rest.len(), |a, _| sigma[(rest[a], j)]);
        let coef = if rest.is_empty() {
            DVector::zeros(0)
        } else {
            s_rr.clone()
                .cholesky()
                .ok_or_else(|| DfiError::SingularCovariance {
                    eigenvalue: 0.0,
                    floor: 0.0,
                    block: vec![],
                })?
                .solve(&s_rj)
        };
        let var = (sigma[(j, j)] - coef.dot(&s_rj)).max(0.0);
        Ok(GaussianConditional {
            mean_j: means[j],
            means_rest: rest.iter().map(|&a| means[a]).collect(),
            coef: coef.iter().copied().collect(),
            sd: var.sqrt(),
        })
    }

    fn mean(&self, row: &[f64], j: usize) -> f64 {
        let mut m = self.mean_j;
        let mut a = 0;
        for (b, v) in row.iter().enumerate() {
            if b == j {
                continue;
            }
            m += self.coef[a] * (v - self.means_rest[a]);
            a += 1;
        }
        m
    }
}

fn column_means(x: &Rows) -> Vec<f64> {
    (0..x.width())
        .map(|j| x.iter_rows().map(|r| r[j]).sum::<f64>() / x.n_rows() as f64)
        .collect()
}

fn regressor_for_fold(config: &RunConfig, k: usize, j: Option<usize>) -> RegressorConfig {
    let mut rc = config.regressor.clone();
    let base = fold_seed(config.seed, k);
    rc.seed = match j {
        Some(j) => base.wrapping_add((j as u64 + 1).wrapping_mul(1 << 20)),
        None => base,
    };
    rc
}

/// `E[μ(X) | X₋j]` for a Gaussian `X_j | X₋j`.
fn conditional_mean_oracle(mu: &FittedRegressor, cond: &GaussianConditional, row: &[f64], j: usize, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (t, w) = nodes;
    let center = cond.mean(row, j);
    let scale = std::f64::consts::SQRT_2 * cond.sd;
    let mut buf = row.to_vec();
    let mut acc = 0.0;
    for (ti, wi) in t.iter().zip(w) {
        buf[j] = center + scale * ti;
        acc += wi * mu.predict_row(&buf);
    }
    acc / std::f64::consts::PI.sqrt()
}

struct FoldData {
    eval: Vec<usize>,
    x_nuis: Rows,
    y_nuis: Vec<f64>,
    x_eval: Rows,
    y_eval: Vec<f64>,
}

fn fold_data(ds: &Dataset, eval: Vec<usize>, nuisance: &[usize]) -> FoldData {
    FoldData {
        x_nuis: ds.x().select(nuisance),
        y_nuis: nuisance.iter().map(|&i| ds.y()[i]).collect(),
        x_eval: ds.x().select(&eval),
        y_eval: eval.iter().map(|&i| ds.y()[i]).collect(),
        eval,
    }
}

type FoldKernels = (Vec<usize>, Vec<Vec<f64>>);

fn run_baseline(
    ds: &Dataset,
    config: &RunConfig,
    method: BaselineMethod,
    per_fold: impl Fn(usize, &FoldData) -> Result<Vec<Vec<f64>>>,
) -> Result<BaselineResult> {
    config.validate()?;
    let n = ds.n();
    let folds: Vec<FoldKernels> = fold_splits(n, config)?
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let fd = fold_data(ds, s.eval, &s.nuisance);
            let kernels = per_fold(k, &fd)?;
            Ok((fd.eval, kernels))
        })
        .collect::<Result<_>>()?;
    let settings = InferenceSettings {
        alpha: config.alpha,
        inflate_near_null: config.inflate_near_null,
    };
    let kf = folds.len() as f64;
    let mut estimates = Vec::with_capacity(ds.d());
    for (j, name) in ds.feature_names().iter().enumerate() {
        let centered: Vec<(f64, Vec<f64>)> = folds
            .iter()
            .map(|(_, kernels)| {
                let k = &kernels[j];
                let phi = k.iter().sum::<f64>() / k.len() as f64;
                (phi, k.iter().map(|v| v - phi).collect())
            })
            .collect();
        let parts: Vec<_> = folds
            .iter()
            .zip(&centered)
            .map(|((eval, _), (phi, ifs))| (&eval[..], 1.0 / kf, *phi, &ifs[..]))
            .collect();
        let (est, ifs) = pool(n, &parts);
        estimates.push(ImportanceEstimate::from_influence(name.clone(), est, ifs, settings)?);
    }
    Ok(BaselineResult { method, estimates })
}

/// Cross-fitted LOCO: `mean[(y − μ̂₋j)² − (y − μ̂)²]` per feature.
pub fn loco_importance(ds: &Dataset, config: &RunConfig) -> Result<BaselineResult> {
    let d = ds.d();
    let nodes = gauss_hermite(HERMITE_NODES);
    run_baseline(ds, config, BaselineMethod::Loco, |k, fd| {
        let mu = regression::fit(&regressor_for_fold(config, k, None), &fd.x_nuis, &fd.y_nuis)?;
        let base = mu.predict(&fd.x_eval)?;
        let oracle = config.regressor.kind == RegressorKind::Oracle;
        let (sigma, means) = if oracle {
            (Some(fold_covariance(&fd.x_nuis, config)?), column_means(&fd.x_nuis))
        } else {
            (None, vec![])
        };
        (0..d)
            .into_par_iter()
            .map(|j| {
                let reduced: Vec<f64> = match &sigma {
                    Some(sigma) => {
                        let cond = GaussianConditional::new(sigma, &means, j)?;
                        fd.x_eval
                            .iter_rows()
                            .map(|r| conditional_mean_oracle(&mu, &cond, r, j, &nodes))
                            .collect()
                    }
                    None if d == 1 => {
                        let m = fd.y_nuis.iter().sum::<f64>() / fd.y_nuis.len() as f64;
                        vec![m; fd.eval.len()]
                    }
                    None => {
                        let sub = regression::fit(
                            &regressor_for_fold(config, k, Some(j)),
                            &fd.x_nuis.drop_column(j),
                            &fd.y_nuis,
                        )?;
                        sub.predict(&fd.x_eval.drop_column(j))?
                    }
                };
                Ok(fd
                    .y_eval
                    .iter()
                    .zip(&base)
                    .zip(&reduced)
                    .map(|((y, mu), red)| {
                        let delta = mu - red;
                        2.0 * (y - mu) * delta + delta * delta
                    })
                    .collect())
            })
            .collect()
    })
}

/// Least-squares fit with intercept of column `j` on the others.
fn linear_nu(x: &Rows, j: usize) -> Result<FittedRegressor> {
    let d = x.width();
    let p = d; // intercept plus d - 1 slopes
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    let mut feat = vec![0.0; p];
    for r in x.iter_rows() {
        feat[0] = 1.0;
        let mut a = 1;
        for (b, v) in r.iter().enumerate() {
            if b != j {
                feat[a] = *v;
                a += 1;
            }
        }
        for a in 0..p {
            xty[a] += feat[a] * r[j];
            for b in 0..p {
                xtx[(a, b)] += feat[a] * feat[b];
            }
        }
    }
    let beta = xtx
        .cholesky()
        .ok_or_else(|| DfiError::InvalidDataset(format!("collinear predictors for feature {j}")))?
        .solve(&xty);
    let beta: Vec<f64> = beta.iter().copied().collect();
    Ok(FittedRegressor::from_fn(d - 1, move |rest| {
        beta[0] + rest.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>()
    }))
}

/// Cross-fitted CPI with the residual-bootstrap conditional sampler:
/// `x̃_j = ν̂_j(x₋j) + (w_j − ν̂_j(w₋j))` for a random evaluation row `w`.
pub fn cpi_importance(ds: &Dataset, config: &RunConfig) -> Result<BaselineResult> {
    let d = ds.d();
    let m = config.m_resamples;
    run_baseline(ds, config, BaselineMethod::Cpi, |k, fd| {
        let mu = regression::fit(&regressor_for_fold(config, k, None), &fd.x_nuis, &fd.y_nuis)?;
        let base = mu.predict(&fd.x_eval)?;
        let oracle = config.regressor.kind == RegressorKind::Oracle;
        (0..d)
            .into_par_iter()
            .map(|j| {
                let ne = fd.eval.len();
                let fitted: Vec<f64> = if d == 1 {
                    let mean = fd.x_nuis.column(0).iter().sum::<f64>() / fd.x_nuis.n_rows() as f64;
                    vec![mean; ne]
                } else {
                    let rest_nuis = fd.x_nuis.drop_column(j);
                    let nu = if oracle {
                        linear_nu(&fd.x_nuis, j)?
                    } else {
                        regression::fit(&regressor_for_fold(config, k, Some(j)), &rest_nuis, &fd.x_nuis.column(j))?
                    };
                    nu.predict(&fd.x_eval.drop_column(j))?
                };
                let resid: Vec<f64> = (0..ne).map(|i| fd.x_eval.get(i, j) - fitted[i]).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(fold_seed(config.seed, k).wrapping_add(j as u64));
                let mut buf = vec![0.0; d];
                Ok((0..ne)
                    .map(|i| {
                        buf.copy_from_slice(fd.x_eval.row(i));
                        let y = fd.y_eval[i];
                        let r0 = y - base[i];
                        let mut acc = 0.0;
                        for _ in 0..m {
                            buf[j] = fitted[i] + resid[rng.random_range(0..ne)];
                            let delta = base[i] - mu.predict_row(&buf);
                            acc += 2.0 * r0 * delta + delta * delta;
                        }
                        0.5 * acc / m as f64
                    })
                    .collect())
            })
            .collect()
    })
}
