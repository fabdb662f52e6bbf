//! Cross-fitted orchestration from a dataset to an [`ImportanceReport`].

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::{CovarianceSource, EtaFit, RunConfig};
use crate::data::{Dataset, Rows};
use crate::error::{DfiError, Result};
use crate::importance::attribute::{attribute, AttributedImportanceResult};
use crate::importance::groups::{group_importance, Group};
use crate::importance::inference::InferenceSettings;
use crate::importance::latent::{latent_importance_with, LatentImportanceResult, LatentOptions, Resampling};
use crate::regression::{self, split_folds, FittedRegressor, RegressorKind};
use crate::report::{ImportanceEstimate, ImportanceReport, Totals};
use crate::transport::{estimate_covariance, LinearTransport};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub groups: Option<Vec<Group>>,
    /// Embed the per-fold transports in the report.
    pub keep_transports: bool,
}

/// Runs the estimator with default options.
pub fn run_dfi(ds: &Dataset, config: &RunConfig) -> Result<ImportanceReport> {
    run_dfi_with(ds, config, &RunOptions::default())
}

/// One evaluation fold and the nuisance quantities fit on its complement.
pub(crate) struct FoldSplit {
    pub eval: Vec<usize>,
    pub nuisance: Vec<usize>,
}

pub(crate) fn fold_splits(n: usize, config: &RunConfig) -> Result<Vec<FoldSplit>> {
    let folds = split_folds(n, config.n_folds, config.seed)?;
    Ok((0..folds.k())
        .map(|k| FoldSplit {
            eval: folds.indices(k),
            nuisance: folds.complement(k),
        })
        .collect())
}

/// Seed for anything fit on the nuisance part of fold `k`, spaced so that
/// per-tree offsets from different folds never collide.
pub(crate) fn fold_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64 + 1).wrapping_mul(1 << 32))
}

/// Covariance on the nuisance rows, or the configured known matrix.
pub(crate) fn fold_covariance(x_nuisance: &Rows, config: &RunConfig) -> Result<DMatrix<f64>> {
    match &config.covariance {
        CovarianceSource::Estimate => Ok(estimate_covariance(x_nuisance)?.sigma),
        CovarianceSource::Known { matrix } => known_matrix(matrix, x_nuisance.width()),
    }
}

fn known_matrix(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(DfiError::InvalidConfig(format!("known covariance must be {d} x {d}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(DfiError::InvalidConfig("known covariance has non-finite entries".into()));
    }
    let m = DMatrix::from_fn(d, d, |a, b| rows[a][b]);
    let asym = (&m - m.transpose()).amax();
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(DfiError::InvalidConfig("known covariance is not symmetric".into()));
    }
    Ok(m)
}

fn fit_eta(
    config: &RunConfig,
    k: usize,
    x_nuisance: &Rows,
    z_nuisance: &Rows,
    y_nuisance: &[f64],
    transport: &LinearTransport,
) -> Result<FittedRegressor> {
    let mut rc = config.regressor.clone();
    rc.seed = fold_seed(config.seed, k);
    // an oracle is a function of x, so it is always read through L
    if config.eta_fit == EtaFit::Compose || rc.kind == RegressorKind::Oracle {
        regression::fit(&rc, x_nuisance, y_nuisance)?.compose_linear(transport.l.clone())
    } else {
        regression::fit(&rc, z_nuisance, y_nuisance)
    }
}

struct FoldOutcome {
    eval: Vec<usize>,
    latent: Vec<LatentImportanceResult>,
    attributed: Vec<AttributedImportanceResult>,
    weight_row_sums: Vec<f64>,
    sigma_diag: Vec<f64>,
    transport: LinearTransport,
}

fn run_fold(ds: &Dataset, config: &RunConfig, k: usize, split: FoldSplit) -> Result<FoldOutcome> {
    let d = ds.d();
    let x_nuis = ds.x().select(&split.nuisance);
    let y_nuis: Vec<f64> = split.nuisance.iter().map(|&i| ds.y()[i]).collect();
    let x_eval = ds.x().select(&split.eval);
    let y_eval: Vec<f64> = split.eval.iter().map(|&i| ds.y()[i]).collect();

    let sigma = fold_covariance(&x_nuis, config)?;
    let transport =
        LinearTransport::from_covariance_named(&sigma, config.transport_kind, config.eigen_floor, ds.feature_names())?;
    let z_nuis = transport.forward(&x_nuis)?;
    let z_eval = transport.forward(&x_eval)?;

    let eta = fit_eta(config, k, &x_nuis, &z_nuis, &y_nuis, &transport)?;
    let base = eta.predict(&z_eval)?;
    let resampling = if config.full_support {
        Resampling::FullSupport
    } else {
        Resampling::Random { m: config.m_resamples }
    };
    let latent = (0..d)
        .into_par_iter()
        .map(|j| {
            let opts = LatentOptions {
                resampling,
                estimator: config.estimator,
                seed: config.seed.wrapping_add((k * d + j) as u64),
            };
            latent_importance_with(&eta, &z_eval, &y_eval, j, &opts, Some(&base))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = transport.attribution_weights();
    let attributed = attribute(&latent, &weights)?;
    Ok(FoldOutcome {
        eval: split.eval,
        latent,
        attributed,
        weight_row_sums: weights.row_sums(),
        sigma_diag: sigma.diagonal().iter().copied().collect(),
        transport,
    })
}

/// Combines per-fold estimates `Σ_k c_k·φ^(k)` (weights summing to 1) and
/// places each fold's influence values, scaled by `n·c_k/n_k`, at their
/// original rows.
pub(crate) fn pool(n: usize, parts: &[(&[usize], f64, f64, &[f64])]) -> (f64, Vec<f64>) {
    let mut estimate = 0.0;
    let mut influence = vec![0.0; n];
    for &(rows, c, phi, ifs) in parts {
        estimate += c * phi;
        let scale = n as f64 * c / rows.len() as f64;
        for (&i, v) in rows.iter().zip(ifs) {
            influence[i] = scale * v;
        }
    }
    (estimate, influence)
}

/// Cross-fitted latent and attributed importance.
///
/// Each fold's latent estimates are pooled with weights proportional to that
/// fold's `Σ_l w[j][l]`, attributed estimates with equal weights; this keeps
/// `Σ_j w̄_j·φ̂_Zj = Σ_l φ̂_Xl` exact with `w̄` the fold-averaged row sums.
pub fn run_dfi_with(ds: &Dataset, config: &RunConfig, options: &RunOptions) -> Result<ImportanceReport> {
    config.validate()?;
    let n = ds.n();
    let d = ds.d();
    let splits = fold_splits(n, config)?;
    let n_folds = splits.len();
    let outcomes = splits
        .into_iter()
        .enumerate()
        .map(|(k, s)| run_fold(ds, config, k, s))
        .collect::<Result<Vec<_>>>()?;

    let settings = InferenceSettings {
        alpha: config.alpha,
        inflate_near_null: config.inflate_near_null,
    };
    let kf = n_folds as f64;

    let mut latent = Vec::with_capacity(d);
    let mut latent_weights = vec![0.0; d];
    for j in 0..d {
        let total_r: f64 = outcomes.iter().map(|o| o.weight_row_sums[j]).sum();
        latent_weights[j] = total_r / kf;
        let parts: Vec<_> = outcomes
            .iter()
            .map(|o| {
                let r = &o.latent[j];
                (&o.eval[..], o.weight_row_sums[j] / total_r, r.phi_hat, &r.influence_values[..])
            })
            .collect();
        let (est, ifs) = pool(n, &parts);
        latent.push(ImportanceEstimate::from_influence(format!("Z{}", j + 1), est, ifs, settings)?);
    }

    let mut pooled_attr = Vec::with_capacity(d);
    for l in 0..d {
        let parts: Vec<_> = outcomes
            .iter()
            .map(|o| {
                let r = &o.attributed[l];
                (&o.eval[..], 1.0 / kf, r.phi_hat, &r.influence_values[..])
            })
            .collect();
        let (phi_hat, influence_values) = pool(n, &parts);
        pooled_attr.push(AttributedImportanceResult {
            l,
            phi_hat,
            influence_values,
        });
    }
    let attributed = pooled_attr
        .iter()
        .zip(ds.feature_names())
        .map(|(a, name)| ImportanceEstimate::from_influence(name.clone(), a.phi_hat, a.influence_values.clone(), settings))
        .collect::<Result<Vec<_>>>()?;

    let groups = match &options.groups {
        Some(g) => Some(group_importance(&pooled_attr, g, settings)?),
        None => None,
    };

    let sigma_diag = (0..d)
        .map(|j| outcomes.iter().map(|o| o.sigma_diag[j]).sum::<f64>() / kf)
        .collect();
    let totals = Totals {
        latent: latent.iter().map(|e| e.estimate).sum(),
        attributed: attributed.iter().map(|e| e.estimate).sum(),
    };
    let transports = options
        .keep_transports
        .then(|| outcomes.iter().map(|o| o.transport.clone()).collect());

    let report = ImportanceReport {
        config: config.clone(),
        latent,
        attributed,
        groups,
        totals,
        sigma_diag,
        latent_weights,
        standardization: None,
        baselines: None,
        transports,
    };
    debug_assert!(report.decomposition_gap() < 1e-10, "gap {}", report.decomposition_gap());
    Ok(report)
}
