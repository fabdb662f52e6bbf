mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use dfi::baselines::{cpi_importance, loco_importance};
use dfi::importance::{parse_groups, run_dfi_with, RunOptions};
use dfi::simulation::{coverage_study, replication_study, Model, ModelSpec, StudyResult};
use dfi::{load_csv, standardize, write_report, CovarianceSource, ImportanceReport, RegressorConfig, RunConfig, TransportKind};

#[derive(Parser)]
#[command(name = "dfi", version, about = "Disentangled feature importance")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate feature importance for a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Run a replication or coverage study on a benchmark model.
    Simulate(SimulateArgs),
    /// Render a report or study summary as SVG or CSV.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Bw,
    Triangular,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegressorArg {
    Forest,
    Kernel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    M1,
    M2,
    M3,
    M4,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Svg,
    Csv,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    target: String,
    /// JSON object mapping group names to lists of feature names.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    folds: usize,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "bw")]
    transport: TransportArg,
    #[arg(long, value_enum, default_value = "forest")]
    regressor: RegressorArg,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    #[arg(long)]
    no_standardize: bool,
    /// Use the plain standard error for intervals and tests.
    #[arg(long)]
    no_inflate: bool,
    #[arg(long)]
    with_loco: bool,
    #[arg(long)]
    with_cpi: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Embed the per-fold transport matrices in the report.
    #[arg(long)]
    verbose: bool,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    /// Score interval coverage against the known truth.
    #[arg(long)]
    coverage: bool,
    /// Use the true regression function and covariance.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    no_inflate: bool,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "svg")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

/// Argument combinations that parse but cannot be run.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(s) => simulate(s),
        Command::Report(r) => report(r),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn echo_config(config: &RunConfig) {
    match serde_json::to_string(config) {
        Ok(s) => eprintln!("config: {s}"),
        Err(e) => eprintln!("config: <unprintable: {e}>"),
    }
}

fn check_run_config(config: &RunConfig) -> Result<()> {
    config.validate().map_err(|e| UsageError(e.to_string()).into())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let regressor = match a.regressor {
        RegressorArg::Forest => RegressorConfig {
            n_trees: a.trees,
            min_leaf: a.min_leaf,
            ..RegressorConfig::forest()
        },
        RegressorArg::Kernel => RegressorConfig::kernel(None),
    };
    let config = RunConfig {
        n_folds: a.folds,
        m_resamples: a.m,
        alpha: a.alpha,
        seed: a.seed,
        transport_kind: match a.transport {
            TransportArg::Bw => TransportKind::BuresWasserstein,
            TransportArg::Triangular => TransportKind::Triangular,
        },
        regressor,
        inflate_near_null: !a.no_inflate,
        ..RunConfig::default()
    };
    check_run_config(&config)?;
    echo_config(&config);

    let raw = load_csv(&a.input, &a.target)?;
    let (ds, info) = if a.no_standardize {
        (raw, None)
    } else {
        let (ds, info) = standardize(&raw)?;
        (ds, Some(info))
    };
    let groups = match &a.groups {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Some(parse_groups(&text, ds.feature_names())?)
        }
        None => None,
    };
    let options = RunOptions {
        groups,
        keep_transports: a.verbose,
    };
    let mut rep = run_dfi_with(&ds, &config, &options)?;
    rep.standardization = info;
    let mut extra = Vec::new();
    if a.with_loco {
        extra.push(loco_importance(&ds, &config)?);
    }
    if a.with_cpi {
        extra.push(cpi_importance(&ds, &config)?);
    }
    if !extra.is_empty() {
        rep.baselines = Some(extra);
    }
    write_report(&rep, &a.output)?;
    eprintln!(
        "wrote {} (total attributed {:.6}, total latent {:.6})",
        a.output.display(),
        rep.totals.attributed,
        rep.totals.latent
    );
    Ok(())
}

fn simulate(s: SimulateArgs) -> Result<()> {
    let model = match s.model {
        ModelArg::M1 => Model::M1,
        ModelArg::M2 => Model::M2,
        ModelArg::M3 => Model::M3,
        ModelArg::M4 => Model::M4,
    };
    let spec = ModelSpec {
        model,
        rho: s.rho,
        n: s.n,
        seed: s.seed,
    };
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    if s.reps < 1 {
        return usage("--reps must be at least 1");
    }
    let mut config = RunConfig {
        m_resamples: s.m,
        alpha: s.alpha,
        seed: s.seed,
        regressor: RegressorConfig {
            n_trees: s.trees,
            ..RegressorConfig::forest()
        },
        inflate_near_null: !s.no_inflate,
        ..RunConfig::default()
    };
    if s.oracle {
        config.regressor = RegressorConfig::oracle(model.oracle());
        if let Some(matrix) = spec.covariance() {
            config.covariance = CovarianceSource::Known { matrix };
        }
    }
    check_run_config(&config)?;
    echo_config(&config);
    let started = std::time::Instant::now();
    let study = if s.coverage {
        coverage_study(&spec, &config, s.reps, s.alpha)?
    } else {
        replication_study(&spec, &config, s.reps)?
    };
    study.write_outputs(&s.out)?;
    eprintln!(
        "wrote {} and {} in {:.1}s",
        s.out.join("replicates.csv").display(),
        s.out.join("summary.json").display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Rows of the flat table: name, estimate, se, ci_lo, ci_hi, z, p.
struct Row {
    name: String,
    estimate: f64,
    se: f64,
    ci: Option<[f64; 2]>,
    z: Option<f64>,
    p: Option<f64>,
}

fn load_rows(path: &Path) -> Result<(String, Vec<Row>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        // reparse through the typed reader for its byte-offset diagnostic
        Err(e) => match ImportanceReport::from_json(&text) {
            Err(de) => bail!("{}: {de}", path.display()),
            Ok(_) => bail!("{}: {e}", path.display()),
        },
    };
    if value.get("attributed").is_some() {
        let rep = ImportanceReport::from_json(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let rows = rep
            .attributed
            .iter()
            .map(|e| Row {
                name: e.name.clone(),
                estimate: e.estimate,
                se: e.std_error,
                ci: Some(e.ci),
                z: Some(e.z_score),
                p: Some(e.p_value),
            })
            .collect();
        return Ok((format!("Attributed importance (total {:.4})", rep.totals.attributed), rows));
    }
    if value.get("features").is_some() {
        let study: StudyResult =
            serde_json::from_value(value).with_context(|| format!("{}: not a study summary", path.display()))?;
        let rows = study
            .features
            .iter()
            .map(|f| Row {
                name: f.name.clone(),
                estimate: f.mean,
                se: f.sd,
                ci: None,
                z: None,
                p: None,
            })
            .collect();
        let title = format!(
            "{} (rho = {}), {} replicates (total {:.4})",
            study.spec.model, study.spec.rho, study.reps, study.total_mean
        );
        return Ok((title, rows));
    }
    bail!("{}: neither a report nor a study summary", path.display())
}

fn report(r: ReportArgs) -> Result<()> {
    let (title, rows) = load_rows(&r.input)?;
    let body = match r.format {
        FormatArg::Svg => {
            let bars: Vec<svg::Bar> = rows
                .iter()
                .map(|row| svg::Bar {
                    name: row.name.clone(),
                    value: row.estimate,
                    err: row.se,
                })
                .collect();
            svg::bar_chart(&title, &bars)
        }
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "estimate", "se", "ci_lo", "ci_hi", "z", "p"])?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for row in &rows {
                w.write_record([
                    row.name.clone(),
                    row.estimate.to_string(),
                    row.se.to_string(),
                    opt(row.ci.map(|c| c[0])),
                    opt(row.ci.map(|c| c[1])),
                    opt(row.z),
                    opt(row.p),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    std::fs::write(&r.out, body).with_context(|| format!("cannot write {}", r.out.display()))?;
    Ok(())
}
