use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ufs_core::graph::Bandwidth;
use ufs_core::io::{
    run_grid, run_maxvar, run_robustness, run_single, ColumnRef, GridSpec, LabelSource, LoadOptions, RunConfig,
};
use ufs_core::pipeline::PipelineConfig;
use ufs_core::solver::{HyperParams, ToleranceSchedule};

/// Unsupervised feature selection with l2,1 regularization and nonnegative
/// orthogonal constraints.
#[derive(Parser, Debug)]
#[command(name = "ufs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve once and write ranking.txt, trace.csv and metrics.json.
    Run(Common),
    /// Grid search over alpha, beta and gamma; writes grid.csv and best.json.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1,1e1,1e2,1e3,1e4,1e5,1e6")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1,1e1,1e2,1e3,1e4,1e5,1e6")]
        betas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1,1e1,1e2,1e3,1e4,1e5,1e6")]
        gammas: Vec<f64>,
    },
    /// Gaussian-noise sweep at one feature count; writes robustness.csv.
    Robustness {
        #[command(flatten)]
        common: Common,
        /// Number of selected features.
        #[arg(long)]
        q: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
        sigmas: Vec<f64>,
        /// Noisy copies per noise level.
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Maximum-variance baseline ranking and metrics.
    BaselineMaxvar(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Delimited text file, one sample per line.
    #[arg(long)]
    data: PathBuf,
    /// Label column: `last`, `none` or a 0-based index.
    #[arg(long, default_value = "last")]
    label_column: String,
    /// File with one integer label per line (overrides --label-column).
    #[arg(long)]
    label_file: Option<PathBuf>,
    /// Whether the first line is a header (detected when omitted).
    #[arg(long)]
    header: Option<bool>,
    /// Field separator character (tab or comma detected when omitted).
    #[arg(long)]
    delimiter: Option<char>,
    /// Number of clusters (defaults to the number of distinct labels).
    #[arg(long)]
    clusters: Option<usize>,
    /// Neighbors in the k-NN graph.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Gaussian kernel bandwidth, or `auto`.
    #[arg(long, default_value = "auto")]
    sigma: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Feature counts to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "50,100,150,200,250,300")]
    features: Vec<usize>,
    #[arg(long, default_value_t = 0.99)]
    tau: f64,
    /// Penalty growth factor.
    #[arg(long, default_value_t = 1.01)]
    growth: f64,
    /// Initial penalty (defaults to clusters / 2).
    #[arg(long)]
    rho_init: Option<f64>,
    /// Inner tolerance at outer iteration k is eps_scale * eps_ratio^k.
    #[arg(long, default_value_t = 1.0)]
    eps_scale: f64,
    #[arg(long, default_value_t = 0.995)]
    eps_ratio: f64,
    #[arg(long, default_value_t = 20)]
    max_outer: usize,
    #[arg(long, default_value_t = 500)]
    max_inner: usize,
    #[arg(long, default_value_t = 0.5)]
    proximal: f64,
    #[arg(long, default_value_t = 100.0)]
    lambda_bound: f64,
    /// Stop early once stationarity and infeasibility drop below this.
    #[arg(long)]
    early_stop: Option<f64>,
    /// Z-score every feature before building the graph.
    #[arg(long)]
    standardize: bool,
    /// k-means restarts per evaluation.
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Concurrent grid cells (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn parse_label_column(s: &str) -> Result<Option<ColumnRef>> {
    Ok(match s {
        "none" => None,
        "last" => Some(ColumnRef::Last),
        other => Some(ColumnRef::Index(
            other
                .parse()
                .with_context(|| format!("invalid --label-column `{other}`"))?,
        )),
    })
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth> {
    if s == "auto" {
        return Ok(Bandwidth::Auto);
    }
    let v: f64 = s.parse().with_context(|| format!("invalid --sigma `{s}`"))?;
    Ok(Bandwidth::Fixed(v))
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let labels = match (&self.label_file, parse_label_column(&self.label_column)?) {
            (Some(p), _) => LabelSource::File(p.clone()),
            (None, Some(col)) => LabelSource::Column(col),
            (None, None) => LabelSource::None,
        };
        let delimiter = match self.delimiter {
            Some(c) if c.is_ascii() => Some(c as u8),
            Some(c) => bail!("delimiter must be an ASCII character, got `{c}`"),
            None => None,
        };
        let hp = HyperParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            tau: self.tau,
            growth: self.growth,
            rho_init: self.rho_init,
            lambda_min: -self.lambda_bound,
            lambda_max: self.lambda_bound,
            tolerance: ToleranceSchedule::Geometric {
                scale: self.eps_scale,
                ratio: self.eps_ratio,
            },
            proximal: self.proximal,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            early_stop: self.early_stop,
            ..HyperParams::default()
        };
        let cfg = RunConfig {
            dataset: self.data.clone(),
            load: LoadOptions {
                delimiter,
                header: self.header,
                labels,
                n_clusters: self.clusters,
            },
            pipeline: PipelineConfig {
                neighbors: self.k,
                bandwidth: parse_bandwidth(&self.sigma)?,
                standardize: self.standardize,
                hp,
                repeats: self.repeats,
                seed: self.seed,
            },
            feature_counts: self.features.clone(),
            output_dir: self.out.clone(),
            grid: GridSpec::full_decades(),
            workers: self.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_summary(q: usize, m: &ufs_core::eval::MetricSummary) {
    println!(
        "q={q:<5} ACC {:.4} ± {:.4}  NMI {:.4} ± {:.4}",
        m.acc_mean, m.acc_std, m.nmi_mean, m.nmi_std
    );
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.config()?;
            let run = run_single(&cfg)?;
            let trace = &run.report.outcome.trace;
            if let Some(last) = trace.records.last() {
                println!(
                    "{} outer iterations, final rho {:.4}, stationarity {:.3e}, infeasibility {:.3e}",
                    trace.len(),
                    last.rho,
                    run.report.outcome.theta.inf_norm,
                    run.report.outcome.residuals.max_inf()
                );
            }
            for (q, m) in &run.report.evaluations {
                print_summary(*q, m);
            }
        }
        Command::Grid {
            common,
            alphas,
            betas,
            gammas,
        } => {
            let mut cfg = common.config()?;
            cfg.grid = GridSpec { alphas, betas, gammas };
            let summary = run_grid(&cfg)?;
            let failed = summary.rows.iter().filter(|r| r.metrics.is_none()).count();
            println!("{} rows, {failed} failed", summary.rows.len());
            for (name, row) in [("best ACC", &summary.best_acc), ("best NMI", &summary.best_nmi)] {
                match row {
                    Some(r) => println!("{name}: {}", r.to_csv()),
                    None => println!("{name}: none"),
                }
            }
        }
        Command::Robustness {
            common,
            q,
            sigmas,
            trials,
        } => {
            let cfg = common.config()?;
            for (s, m) in run_robustness(&cfg, q, &sigmas, trials)? {
                println!(
                    "sigma={s:<5} ACC {:.4} ± {:.4}  NMI {:.4} ± {:.4}",
                    m.acc_mean, m.acc_std, m.nmi_mean, m.nmi_std
                );
            }
        }
        Command::BaselineMaxvar(common) => {
            let cfg = common.config()?;
            for (q, m) in run_maxvar(&cfg)? {
                print_summary(q, &m);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
