//! Replication and coverage studies over generated datasets.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{cpi_importance, loco_importance, BaselineMethod};
use crate::config::RunConfig;
use crate::error::{DfiError, Result};
use crate::importance::run_dfi;
use crate::simulation::models::{feature_names, generate, theoretical_values, ModelSpec, TheoreticalValues};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StudyOptions {
    pub with_loco: bool,
    pub with_cpi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub feature: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `None` when the true value is unknown.
    pub covered: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub truth: Option<f64>,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub method: BaselineMethod,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub spec: ModelSpec,
    pub reps: usize,
    pub alpha: f64,
    pub features: Vec<FeatureSummary>,
    pub total_mean: f64,
    pub total_sd: f64,
    /// Average coverage over the model's null features, when it has any.
    pub null_coverage: Option<f64>,
    pub theoretical: Option<TheoreticalValues>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baselines: Vec<BaselineSummary>,
    #[serde(skip)]
    pub replicates: Vec<ReplicateRecord>,
    /// Latent estimates per replicate, `[replicate][j]`.
    #[serde(skip)]
    pub latent: Vec<Vec<f64>>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Attributed-importance truth per feature: the closed form when available,
/// else 0 on null features and unknown elsewhere.
fn truths(spec: &ModelSpec, theory: Option<&TheoreticalValues>) -> Vec<Option<f64>> {
    let d = spec.model.d();
    if let Some(phi) = theory.and_then(|t| t.phi_x.as_ref()) {
        return phi.iter().copied().map(Some).collect();
    }
    let nulls = spec.model.null_features();
    (0..d).map(|l| nulls.contains(&l).then_some(0.0)).collect()
}

struct Replicate {
    attributed: Vec<(f64, f64, f64, f64)>,
    latent: Vec<f64>,
    baselines: Vec<Vec<f64>>,
}

/// `reps` independent generate → estimate cycles with seeds `seed + r`.
pub fn replication_study(spec: &ModelSpec, config: &RunConfig, reps: usize) -> Result<StudyResult> {
    replication_study_with(spec, config, reps, StudyOptions::default())
}

pub fn replication_study_with(
    spec: &ModelSpec,
    config: &RunConfig,
    reps: usize,
    options: StudyOptions,
) -> Result<StudyResult> {
    if reps < 1 {
        return Err(DfiError::InvalidConfig("reps must be at least 1".into()));
    }
    spec.validate()?;
    config.validate()?;
    let runs: Vec<Replicate> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let ds = generate(&spec.with_seed(spec.seed.wrapping_add(r as u64)))?;
            let cfg = RunConfig {
                seed: config.seed.wrapping_add(r as u64),
                ..config.clone()
            };
            let report = run_dfi(&ds, &cfg)?;
            let mut baselines = Vec::new();
            if options.with_loco {
                baselines.push(loco_importance(&ds, &cfg)?.estimates.iter().map(|e| e.estimate).collect());
            }
            if options.with_cpi {
                baselines.push(cpi_importance(&ds, &cfg)?.estimates.iter().map(|e| e.estimate).collect());
            }
            Ok(Replicate {
                attributed: report
                    .attributed
                    .iter()
                    .map(|e| (e.estimate, e.std_error, e.ci_low(), e.ci_high()))
                    .collect(),
                latent: report.latent.iter().map(|e| e.estimate).collect(),
                baselines,
            })
        })
        .collect::<Result<_>>()?;

    let theory = theoretical_values(spec).ok();
    let truth = truths(spec, theory.as_ref());
    let names = feature_names(spec.model.d());
    let mut replicates = Vec::with_capacity(reps * names.len());
    for (r, run) in runs.iter().enumerate() {
        for (l, &(estimate, se, ci_lo, ci_hi)) in run.attributed.iter().enumerate() {
            replicates.push(ReplicateRecord {
                replicate: r,
                feature: names[l].clone(),
                estimate,
                se,
                ci_lo,
                ci_hi,
                covered: truth[l].map(|t| ci_lo <= t && t <= ci_hi),
            });
        }
    }

    let features: Vec<FeatureSummary> = names
        .iter()
        .enumerate()
        .map(|(l, name)| {
            let est: Vec<f64> = runs.iter().map(|r| r.attributed[l].0).collect();
            let (mean, sd) = mean_sd(&est);
            let coverage = truth[l].map(|_| {
                let hits = replicates
                    .iter()
                    .filter(|rec| rec.feature == *name && rec.covered == Some(true))
                    .count();
                hits as f64 / reps as f64
            });
            FeatureSummary {
                name: name.clone(),
                mean,
                sd,
                truth: truth[l],
                coverage,
            }
        })
        .collect();
    let totals: Vec<f64> = runs.iter().map(|r| r.attributed.iter().map(|a| a.0).sum()).collect();
    let (total_mean, total_sd) = mean_sd(&totals);
    let nulls = spec.model.null_features();
    let null_coverage = (!nulls.is_empty())
        .then(|| nulls.iter().filter_map(|&l| features[l].coverage).sum::<f64>() / nulls.len() as f64);

    let mut methods = Vec::new();
    if options.with_loco {
        methods.push(BaselineMethod::Loco);
    }
    if options.with_cpi {
        methods.push(BaselineMethod::Cpi);
    }
    let baselines = methods
        .into_iter()
        .enumerate()
        .map(|(b, method)| {
            let (means, sds) = (0..names.len())
                .map(|l| mean_sd(&runs.iter().map(|r| r.baselines[b][l]).collect::<Vec<_>>()))
                .unzip();
            BaselineSummary { method, means, sds }
        })
        .collect();

    Ok(StudyResult {
        spec: *spec,
        reps,
        alpha: config.alpha,
        features,
        total_mean,
        total_sd,
        null_coverage,
        theoretical: theory,
        baselines,
        replicates,
        latent: runs.into_iter().map(|r| r.latent).collect(),
    })
}

/// Replication study with intervals at level `1 − alpha`, scored against
/// the known truth (0 for null features).
pub fn coverage_study(spec: &ModelSpec, config: &RunConfig, reps: usize, alpha: f64) -> Result<StudyResult> {
    let cfg = RunConfig { alpha, ..config.clone() };
    replication_study(spec, &cfg, reps)
}

impl StudyResult {
    /// One row per replicate and feature.
    pub fn write_replicates_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| DfiError::Csv(e.to_string());
        w.write_record(["replicate", "feature", "estimate", "se", "ci_lo", "ci_hi", "covered"])
            .map_err(csv_err)?;
        for r in &self.replicates {
            let covered = match r.covered {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            w.write_record([
                r.replicate.to_string(),
                r.feature.clone(),
                r.estimate.to_string(),
                r.se.to_string(),
                r.ci_lo.to_string(),
                r.ci_hi.to_string(),
                covered.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| DfiError::Csv(e.to_string()))
    }

    pub fn summary_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DfiError::InvalidDataset(format!("cannot encode summary: {e}")))
    }

    /// Writes `replicates.csv` and `summary.json` into `dir`, creating it.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| DfiError::io(dir, e))?;
        let csv_path = dir.join("replicates.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| DfiError::io(&csv_path, e))?;
        self.write_replicates_csv(std::io::BufWriter::new(file))?;
        let json_path = dir.join("summary.json");
        let mut text = self.summary_json()?;
        text.push('\n');
        std::fs::write(&json_path, text).map_err(|e| DfiError::io(&json_path, e))
    }
}
