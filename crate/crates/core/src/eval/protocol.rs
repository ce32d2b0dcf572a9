use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{accuracy, derive_seed, kmeans, nmi};
use crate::alm::{displacement_ratio, OuterTrace};
use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Mean and population standard deviation of ACC and NMI over repeated
/// clustering runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub runs: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl MetricSummary {
    pub fn from_runs(acc: &[f64], nmi: &[f64]) -> Self {
        let (acc_mean, acc_std) = mean_std(acc);
        let (nmi_mean, nmi_std) = mean_std(nmi);
        Self {
            acc_mean,
            acc_std,
            nmi_mean,
            nmi_std,
            runs: acc.len(),
        }
    }

    /// Field-wise average of several summaries.
    pub fn average(items: &[MetricSummary]) -> Self {
        let n = items.len() as f64;
        let avg = |f: fn(&MetricSummary) -> f64| items.iter().map(f).sum::<f64>() / n;
        Self {
            acc_mean: avg(|m| m.acc_mean),
            acc_std: avg(|m| m.acc_std),
            nmi_mean: avg(|m| m.nmi_mean),
            nmi_std: avg(|m| m.nmi_std),
            runs: items.iter().map(|m| m.runs).sum(),
        }
    }
}

/// Clusters `points` (features × samples) into `c` groups `repeats` times
/// with independently seeded k-means, scoring each run against `labels`.
pub fn evaluate(
    points: &DMatrix<f64>,
    labels: &[usize],
    c: usize,
    repeats: usize,
    seed: u64,
) -> Result<MetricSummary> {
    if repeats < 1 {
        return Err(Error::param("evaluation needs at least one repeat"));
    }
    if labels.len() != points.ncols() {
        return Err(Error::dims(format!(
            "{} labels for {} samples",
            labels.len(),
            points.ncols()
        )));
    }
    let runs: Vec<(f64, f64)> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let clustering = kmeans(points, c, derive_seed(seed, r as u64), 1)?;
            Ok((
                accuracy(labels, &clustering.assignment)?,
                nmi(labels, &clustering.assignment)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (acc, nm): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    Ok(MetricSummary::from_runs(&acc, &nm))
}

/// [`evaluate`] on a labelled data matrix with its own cluster count.
pub fn evaluate_data(data: &DataMatrix, repeats: usize, seed: u64) -> Result<MetricSummary> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::param("evaluation requires ground-truth labels"))?;
    evaluate(data.x(), labels, data.n_clusters(), repeats, seed)
}

/// `η_k = ‖W_{k+1} − W_k‖_F / ‖W_k − W_{k−1}‖_F` for `k = 2..K−1` over the
/// outer iterates of a trace (first element is `η_2`).
pub fn stability_eta(trace: &OuterTrace) -> Result<Vec<f64>> {
    let w = &trace.w_iterates;
    if w.len() < 3 {
        return Err(Error::param(format!(
            "stability ratio needs at least 3 outer iterates, got {}",
            w.len()
        )));
    }
    Ok(w.windows(3)
        .map(|t| displacement_ratio(&t[0], &t[1], &t[2]))
        .collect())
}
