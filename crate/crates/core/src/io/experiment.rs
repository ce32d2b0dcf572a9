//! Single runs, hyper-parameter grids, noise sweeps and the variance
//! baseline, each writing its results under an output directory.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::dataset::{load_dataset, LoadOptions};
use super::output::{metrics_document, write_atomic, write_metrics, write_ranking, write_trace};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::eval::MetricSummary;
use crate::pipeline::{evaluate_selections, robustness_protocol, run_pipeline, PipelineConfig, PipelineReport};
use crate::select::maxvar_rank;
use crate::solver::HyperParams;

/// Values of `(α, β, γ)` to sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl GridSpec {
    /// `{10⁻⁶, 10⁻⁵, …, 10⁶}` on every axis.
    pub fn full_decades() -> Self {
        let decades: Vec<f64> = (-6..=6).map(|e| 10f64.powi(e)).collect();
        Self {
            alphas: decades.clone(),
            betas: decades.clone(),
            gammas: decades,
        }
    }

    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &a in &self.alphas {
            for &b in &self.betas {
                for &g in &self.gammas {
                    out.push((a, b, g));
                }
            }
        }
        out
    }
}

/// Everything a CLI invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub load: LoadOptions,
    pub pipeline: PipelineConfig,
    /// Selected-feature counts to evaluate.
    pub feature_counts: Vec<usize>,
    pub output_dir: PathBuf,
    pub grid: GridSpec,
    /// Concurrent grid cells; 0 lets the thread pool decide.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            load: LoadOptions::default(),
            pipeline: PipelineConfig::default(),
            feature_counts: vec![50, 100, 150, 200, 250, 300],
            output_dir: PathBuf::from("out"),
            grid: GridSpec::full_decades(),
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::param("dataset path is empty"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::param("output directory is empty"));
        }
        if self.feature_counts.is_empty() || self.feature_counts.contains(&0) {
            return Err(Error::param("feature counts must be a nonempty list of positive integers"));
        }
        if self.pipeline.repeats == 0 {
            return Err(Error::param("k-means repeats must be at least 1"));
        }
        self.pipeline.hp.validate()
    }

    fn load(&self) -> Result<DataMatrix> {
        self.validate()?;
        load_dataset(&self.dataset, &self.load)
    }
}

/// Keeps the requested counts that fit in `d` (first occurrence order).
/// Falls back to all `d` features when none fit.
pub fn resolve_feature_counts(requested: &[usize], d: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &q in requested {
        if q > d {
            warn!("dropping feature count {q}: data has only {d} features");
        } else if q > 0 && !out.contains(&q) {
            out.push(q);
        }
    }
    if out.is_empty() {
        out.push(d);
    }
    out
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn summary_entries(prefix: &str, m: &MetricSummary) -> Vec<(String, Value)> {
    vec![
        (format!("{prefix}acc_mean"), json!(m.acc_mean)),
        (format!("{prefix}acc_std"), json!(m.acc_std)),
        (format!("{prefix}nmi_mean"), json!(m.nmi_mean)),
        (format!("{prefix}nmi_std"), json!(m.nmi_std)),
        (format!("{prefix}runs"), json!(m.runs)),
    ]
}

/// Result of [`run_single`].
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub report: PipelineReport,
    pub feature_counts: Vec<usize>,
    pub metrics: Map<String, Value>,
}

fn run_on_data(data: &DataMatrix, cfg: &PipelineConfig, qs: &[usize], out: &Path) -> Result<SingleRun> {
    ensure_dir(out)?;
    let report = run_pipeline(data, cfg, qs)?;
    let kkt = report.outcome.kkt();
    let hp = &cfg.hp;
    let mut entries: Vec<(String, Value)> = vec![
        ("alpha".into(), json!(hp.alpha)),
        ("beta".into(), json!(hp.beta)),
        ("gamma".into(), json!(hp.gamma)),
        ("neighbors".into(), json!(cfg.neighbors)),
        ("sigma".into(), json!(report.sigma)),
        ("seed".into(), json!(cfg.seed)),
        ("n_samples".into(), json!(data.n_samples())),
        ("n_features".into(), json!(data.n_features())),
        ("n_clusters".into(), json!(data.n_clusters())),
        ("outer_iterations".into(), json!(report.outcome.trace.len())),
        ("final_rho".into(), json!(report.outcome.state.rho)),
        ("stationarity".into(), json!(kkt.stationarity)),
        ("infeasibility".into(), json!(kkt.infeasibility)),
        ("stiefel_violation".into(), json!(kkt.stiefel_violation)),
        ("box_violation".into(), json!(kkt.box_violation)),
    ];
    for (q, m) in &report.evaluations {
        entries.extend(summary_entries(&format!("q{q}_"), m));
    }
    let metrics = metrics_document(entries);
    write_ranking(&out.join("ranking.txt"), &report.ranking)?;
    write_trace(&out.join("trace.csv"), &report.outcome.trace.records)?;
    write_metrics(&out.join("metrics.json"), &metrics)?;
    Ok(SingleRun {
        report,
        feature_counts: qs.to_vec(),
        metrics,
    })
}

/// Loads the dataset, runs the pipeline once and writes `ranking.txt`,
/// `trace.csv` and `metrics.json` into the output directory.
pub fn run_single(cfg: &RunConfig) -> Result<SingleRun> {
    let data = cfg.load()?;
    let qs = resolve_feature_counts(&cfg.feature_counts, data.n_features());
    info!(
        "running on {} features × {} samples, {} clusters",
        data.n_features(),
        data.n_samples(),
        data.n_clusters()
    );
    run_on_data(&data, &cfg.pipeline, &qs, &cfg.output_dir)
}

/// One `(α, β, γ, q)` line of a grid table. `metrics` is `None` when the
/// cell failed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub q: usize,
    pub metrics: Option<MetricSummary>,
    pub status: String,
}

impl GridRow {
    pub const HEADER: &'static str = "alpha,beta,gamma,q,acc_mean,acc_std,nmi_mean,nmi_std,runs,status";

    pub fn to_csv(&self) -> String {
        let m = match &self.metrics {
            Some(m) => format!("{},{},{},{},{}", m.acc_mean, m.acc_std, m.nmi_mean, m.nmi_std, m.runs),
            None => ",,,,".into(),
        };
        let status = self.status.replace([',', '\n'], ";");
        format!("{},{},{},{},{},{}", self.alpha, self.beta, self.gamma, self.q, m, status)
    }

    pub fn parse_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.splitn(10, ',').collect();
        if f.len() != 10 {
            return None;
        }
        let metrics = if f[4].is_empty() {
            None
        } else {
            Some(MetricSummary {
                acc_mean: f[4].parse().ok()?,
                acc_std: f[5].parse().ok()?,
                nmi_mean: f[6].parse().ok()?,
                nmi_std: f[7].parse().ok()?,
                runs: f[8].parse().ok()?,
            })
        };
        Some(Self {
            alpha: f[0].parse().ok()?,
            beta: f[1].parse().ok()?,
            gamma: f[2].parse().ok()?,
            q: f[3].parse().ok()?,
            metrics,
            status: f[9].to_string(),
        })
    }

    fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("alpha".into(), json!(self.alpha));
        doc.insert("beta".into(), json!(self.beta));
        doc.insert("gamma".into(), json!(self.gamma));
        doc.insert("q".into(), json!(self.q));
        if let Some(m) = &self.metrics {
            for (k, v) in summary_entries("", m) {
                doc.insert(k, v);
            }
        }
        Value::Object(doc)
    }
}

/// Grid table plus the rows with the best mean ACC and best mean NMI.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub rows: Vec<GridRow>,
    pub best_acc: Option<GridRow>,
    pub best_nmi: Option<GridRow>,
}

fn best_by(rows: &[GridRow], key: fn(&MetricSummary) -> f64) -> Option<GridRow> {
    let mut best: Option<&GridRow> = None;
    for row in rows {
        if let Some(m) = &row.metrics {
            if best.map_or(true, |b| key(m) > key(b.metrics.as_ref().unwrap())) {
                best = Some(row);
            }
        }
    }
    best.cloned()
}

fn cell_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("cell_{index:04}"))
}

/// Runs the pipeline for every `(α, β, γ)` cell (each evaluated at every
/// feature count), writing per-cell outputs, `grid.csv` and `best.json`.
/// A failing cell is recorded in the table and the grid continues.
pub fn run_grid(cfg: &RunConfig) -> Result<GridSummary> {
    let data = cfg.load()?;
    let cells = cfg.grid.cells();
    if cells.is_empty() {
        return Err(Error::param("grid has no cells"));
    }
    let qs = resolve_feature_counts(&cfg.feature_counts, data.n_features());
    ensure_dir(&cfg.output_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::param(format!("cannot build worker pool: {e}")))?;
    let per_cell: Vec<Vec<GridRow>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(index, &(alpha, beta, gamma))| {
                let pipeline = PipelineConfig {
                    hp: HyperParams {
                        alpha,
                        beta,
                        gamma,
                        ..cfg.pipeline.hp.clone()
                    },
                    ..cfg.pipeline.clone()
                };
                let row = |q: usize, metrics: Option<MetricSummary>, status: String| GridRow {
                    alpha,
                    beta,
                    gamma,
                    q,
                    metrics,
                    status,
                };
                match run_on_data(&data, &pipeline, &qs, &cell_dir(&cfg.output_dir, index)) {
                    Ok(run) => run
                        .report
                        .evaluations
                        .iter()
                        .map(|(q, m)| row(*q, Some(*m), "ok".into()))
                        .collect(),
                    Err(e) => {
                        warn!("grid cell {index} (α={alpha}, β={beta}, γ={gamma}) failed: {e}");
                        qs.iter().map(|&q| row(q, None, format!("error: {e}"))).collect()
                    }
                }
            })
            .collect()
    });
    let rows: Vec<GridRow> = per_cell.into_iter().flatten().collect();

    let mut table = String::from(GridRow::HEADER);
    table.push('\n');
    for r in &rows {
        table.push_str(&r.to_csv());
        table.push('\n');
    }
    write_atomic(&cfg.output_dir.join("grid.csv"), table.as_bytes())?;

    let best_acc = best_by(&rows, |m| m.acc_mean);
    let best_nmi = best_by(&rows, |m| m.nmi_mean);
    let best = metrics_document([
        ("best_acc", best_acc.as_ref().map_or(Value::Null, GridRow::to_json)),
        ("best_nmi", best_nmi.as_ref().map_or(Value::Null, GridRow::to_json)),
    ]);
    write_metrics(&cfg.output_dir.join("best.json"), &best)?;
    Ok(GridSummary {
        rows,
        best_acc,
        best_nmi,
    })
}

/// Noise sweep at a single feature count; writes `robustness.csv`.
pub fn run_robustness(
    cfg: &RunConfig,
    q: usize,
    sigmas: &[f64],
    trials: usize,
) -> Result<Vec<(f64, MetricSummary)>> {
    let data = cfg.load()?;
    if q < 1 || q > data.n_features() {
        return Err(Error::param(format!(
            "feature count {q} must lie in [1, {}]",
            data.n_features()
        )));
    }
    ensure_dir(&cfg.output_dir)?;
    let rows = robustness_protocol(&data, &cfg.pipeline, q, sigmas, trials, cfg.pipeline.seed)?;
    let mut table = String::from("sigma,acc_mean,acc_std,nmi_mean,nmi_std,runs\n");
    for (s, m) in &rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s, m.acc_mean, m.acc_std, m.nmi_mean, m.nmi_std, m.runs
        ));
    }
    write_atomic(&cfg.output_dir.join("robustness.csv"), table.as_bytes())?;
    Ok(rows)
}

/// Maximum-variance baseline: writes `ranking.txt` and `metrics.json`.
pub fn run_maxvar(cfg: &RunConfig) -> Result<Vec<(usize, MetricSummary)>> {
    let data = cfg.load()?;
    let data = if cfg.pipeline.standardize {
        data.standardized()
    } else {
        data
    };
    let qs = resolve_feature_counts(&cfg.feature_counts, data.n_features());
    ensure_dir(&cfg.output_dir)?;
    let ranking = maxvar_rank(&data);
    let evaluations = evaluate_selections(&data, &ranking, &qs, &cfg.pipeline)?;
    let mut entries: Vec<(String, Value)> = vec![
        ("method".into(), json!("maxvar")),
        ("seed".into(), json!(cfg.pipeline.seed)),
        ("n_samples".into(), json!(data.n_samples())),
        ("n_features".into(), json!(data.n_features())),
        ("n_clusters".into(), json!(data.n_clusters())),
    ];
    for (q, m) in &evaluations {
        entries.extend(summary_entries(&format!("q{q}_"), m));
    }
    write_ranking(&cfg.output_dir.join("ranking.txt"), &ranking)?;
    write_metrics(&cfg.output_dir.join("metrics.json"), &metrics_document(entries))?;
    Ok(evaluations)
}
