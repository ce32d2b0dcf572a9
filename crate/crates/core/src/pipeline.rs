//! End-to-end pipeline: graph, outer solve, ranking, per-`q` evaluation,
//! and the additive-noise robustness sweep built on top of it.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::alm::{alm_solve, AlmOutcome, Init};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::eval::{derive_seed, evaluate_data, MetricSummary};
use crate::graph::{build_graph, Bandwidth};
use crate::select::{rank_features, select_top, FeatureRanking};
use crate::solver::{HyperParams, Problem};

/// Everything needed to turn a data matrix into evaluated selections.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub neighbors: usize,
    pub bandwidth: Bandwidth,
    /// z-score every feature before building the graph.
    pub standardize: bool,
    pub hp: HyperParams,
    /// k-means repetitions per evaluation.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            neighbors: 5,
            bandwidth: Bandwidth::Auto,
            standardize: false,
            hp: HyperParams::default(),
            repeats: 20,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    fn kmeans_seed(&self) -> u64 {
        derive_seed(self.seed, u64::MAX)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// Bandwidth actually used by the graph.
    pub sigma: f64,
    pub outcome: AlmOutcome,
    pub ranking: FeatureRanking,
    /// `(q, summary)` for every evaluated feature count, when labels exist.
    pub evaluations: Vec<(usize, MetricSummary)>,
}

/// Runs the method on `data` and evaluates the top-`q` selections for each
/// `q` in `qs`. Evaluation is skipped when the data carries no labels.
pub fn run_pipeline(data: &DataMatrix, cfg: &PipelineConfig, qs: &[usize]) -> Result<PipelineReport> {
    let input = if cfg.standardize {
        data.standardized()
    } else {
        data.clone()
    };
    let graph = build_graph(&input, cfg.neighbors, cfg.bandwidth)?;
    let problem = Problem::from_parts(&input, &graph)?;
    let outcome = alm_solve(&problem, input.n_clusters(), &cfg.hp, Init::Seed(cfg.seed))?;
    let ranking = rank_features(&outcome.state.w);
    let evaluations = evaluate_selections(&input, &ranking, qs, cfg)?;
    Ok(PipelineReport {
        sigma: graph.sigma,
        outcome,
        ranking,
        evaluations,
    })
}

/// Evaluates each top-`q` subset of `ranking` with the configured k-means
/// repetitions. Returns an empty list for unlabelled data.
pub fn evaluate_selections(
    data: &DataMatrix,
    ranking: &FeatureRanking,
    qs: &[usize],
    cfg: &PipelineConfig,
) -> Result<Vec<(usize, MetricSummary)>> {
    if data.labels().is_none() {
        return Ok(Vec::new());
    }
    qs.iter()
        .map(|&q| {
            let reduced = select_top(ranking, q, data)?;
            Ok((q, evaluate_data(&reduced, cfg.repeats, cfg.kmeans_seed())?))
        })
        .collect()
}

/// Adds i.i.d. `N(0, σ²)` noise to every entry. `σ = 0` returns an exact copy.
pub fn add_gaussian_noise(data: &DataMatrix, sigma: f64, seed: u64) -> Result<DataMatrix> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("noise level must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(data.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = DMatrix::from_fn(data.n_features(), data.n_samples(), |_, _| normal.sample(&mut rng));
    data.with_values(data.x() + noise)
}

/// For every noise level, perturbs the (standardized, if configured) input
/// `trials` times, reruns the whole pipeline and averages the top-`q`
/// metrics over trials.
pub fn robustness_protocol(
    data: &DataMatrix,
    cfg: &PipelineConfig,
    q: usize,
    sigmas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<(f64, MetricSummary)>> {
    if trials < 1 {
        return Err(Error::param("robustness protocol needs at least one trial"));
    }
    if data.labels().is_none() {
        return Err(Error::param("robustness protocol requires ground-truth labels"));
    }
    let base = if cfg.standardize {
        data.standardized()
    } else {
        data.clone()
    };
    let inner = PipelineConfig {
        standardize: false,
        ..cfg.clone()
    };
    sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| {
            let per_trial = (0..trials)
                .map(|t| {
                    let noise_seed = derive_seed(seed, (si * trials + t) as u64);
                    let noisy = add_gaussian_noise(&base, sigma, noise_seed)?;
                    let report = run_pipeline(&noisy, &inner, &[q])?;
                    Ok(report.evaluations[0].1)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((sigma, MetricSummary::average(&per_trial)))
        })
        .collect()
}
