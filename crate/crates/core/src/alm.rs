//! Outer inexact augmented Lagrangian loop: inner PAM solve, clamped
//! multiplier step and residual-driven penalty growth.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::solver::{
    augmented_lagrangian_value, pam_solve, stiefel_violation, FactorCache, HyperParams, Multipliers,
    Problem, SolverState, SweepRecord, ThetaResidual,
};

/// Violations of the four coupling constraints at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResiduals {
    /// `Y − XᵀW − U`
    pub r1: DMatrix<f64>,
    /// `V − W`
    pub r2: DMatrix<f64>,
    /// `Y − F`
    pub r3: DMatrix<f64>,
    /// `Ŷ − Y`
    pub r4: DMatrix<f64>,
    pub inf_norms: [f64; 4],
}

impl FeasibilityResiduals {
    pub fn compute(state: &SolverState, x: &DMatrix<f64>) -> Self {
        let r1 = &state.y - x.transpose() * &state.w - &state.u;
        let r2 = &state.v - &state.w;
        let r3 = &state.y - &state.f;
        let r4 = &state.y_hat - &state.y;
        let inf_norms = [r1.amax(), r2.amax(), r3.amax(), r4.amax()];
        Self {
            r1,
            r2,
            r3,
            r4,
            inf_norms,
        }
    }

    pub fn max_inf(&self) -> f64 {
        self.inf_norms.iter().copied().fold(0.0, f64::max)
    }
}

/// `λ̄ ← clamp(λ̄ + ρ·R, λ_min, λ_max)` blockwise, using the state's `ρ`.
pub fn update_multipliers(
    state: &SolverState,
    residuals: &FeasibilityResiduals,
    hp: &HyperParams,
) -> Multipliers {
    let rho = state.rho;
    let step = |lambda: &DMatrix<f64>, r: &DMatrix<f64>| {
        (lambda + r * rho).map(|v| v.clamp(hp.lambda_min, hp.lambda_max))
    };
    let m = &state.multipliers;
    Multipliers {
        l1: step(&m.l1, &residuals.r1),
        l2: step(&m.l2, &residuals.r2),
        l3: step(&m.l3, &residuals.r3),
        l4: step(&m.l4, &residuals.r4),
    }
}

/// Keeps `ρ` when every residual shrank by at least `τ`, otherwise grows it
/// by `r`. Without a previous iterate the previous residuals count as
/// infinite, so the penalty is kept.
pub fn update_penalty(
    now: &FeasibilityResiduals,
    prev: Option<&FeasibilityResiduals>,
    rho: f64,
    hp: &HyperParams,
) -> f64 {
    let Some(prev) = prev else {
        return rho;
    };
    let shrank = now
        .inf_norms
        .iter()
        .zip(prev.inf_norms.iter())
        .all(|(r, p)| *r <= hp.tau * p);
    if shrank {
        rho
    } else {
        hp.growth * rho
    }
}

/// Scalar stationarity and feasibility summary of one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `‖Θ‖∞`
    pub stationarity: f64,
    /// `max_i ‖R_i‖∞`
    pub infeasibility: f64,
    /// `‖ŶᵀŶ − I‖∞`
    pub stiefel_violation: f64,
    /// Largest distance of an entry of `F` outside `[0, 1]`.
    pub box_violation: f64,
}

pub fn kkt_report(
    state: &SolverState,
    theta: &ThetaResidual,
    residuals: &FeasibilityResiduals,
) -> KktReport {
    let box_violation = state
        .f
        .iter()
        .map(|&v| (-v).max(v - 1.0).max(0.0))
        .fold(0.0, f64::max);
    KktReport {
        stationarity: theta.inf_norm,
        infeasibility: residuals.max_inf(),
        stiefel_violation: stiefel_violation(&state.y_hat),
        box_violation,
    }
}

/// One row of the outer trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    /// Penalty used in this iteration's inner solve.
    pub rho: f64,
    pub eps: f64,
    pub theta_inf: f64,
    pub residuals: [f64; 4],
    pub inner_sweeps: usize,
    pub inner_converged: bool,
    /// Augmented Lagrangian at the inner solution, before the multiplier
    /// and penalty updates.
    pub lagrangian: f64,
    /// `‖W_{k+1} − W_k‖_F / ‖W_k − W_{k−1}‖_F`; known once iteration `k+1`
    /// has finished, so the first and last rows stay `None`.
    pub eta: Option<f64>,
    /// Per-sweep inner diagnostics.
    pub sweeps: Vec<SweepRecord>,
}

/// Append-only history of an outer solve, plus the `W` iterate of every
/// outer iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OuterTrace {
    pub records: Vec<OuterRecord>,
    pub w_iterates: Vec<DMatrix<f64>>,
}

impl OuterTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, record: OuterRecord, w: DMatrix<f64>) {
        debug_assert!(self.records.last().map_or(true, |r| r.k < record.k));
        self.records.push(record);
        self.w_iterates.push(w);
        let m = self.w_iterates.len();
        if m >= 3 {
            let eta = displacement_ratio(
                &self.w_iterates[m - 3],
                &self.w_iterates[m - 2],
                &self.w_iterates[m - 1],
            );
            self.records[m - 2].eta = Some(eta);
        }
    }
}

/// `‖next − cur‖_F / ‖cur − prev‖_F`, or 0 when the denominator vanishes.
pub(crate) fn displacement_ratio(prev: &DMatrix<f64>, cur: &DMatrix<f64>, next: &DMatrix<f64>) -> f64 {
    let den = (cur - prev).norm();
    if den == 0.0 {
        0.0
    } else {
        (next - cur).norm() / den
    }
}

/// Starting point of an outer solve.
#[derive(Debug, Clone)]
pub enum Init {
    Seed(u64),
    State(SolverState),
}

/// Output of [`alm_solve`].
#[derive(Debug, Clone)]
pub struct AlmOutcome {
    /// Final primal iterate with the multipliers and penalty that the last
    /// outer iteration produced.
    pub state: SolverState,
    pub theta: ThetaResidual,
    pub residuals: FeasibilityResiduals,
    pub trace: OuterTrace,
}

impl AlmOutcome {
    pub fn kkt(&self) -> KktReport {
        kkt_report(&self.state, &self.theta, &self.residuals)
    }
}

/// Runs up to `hp.max_outer` outer iterations. Each iteration warm-starts
/// the inner solve from the previous iterate with tolerance `ε_k`, then
/// updates multipliers and penalty. Inner non-convergence is recorded in the
/// trace and never aborts the run.
pub fn alm_solve(problem: &Problem<'_>, n_clusters: usize, hp: &HyperParams, init: Init) -> Result<AlmOutcome> {
    hp.validate()?;
    let mut state = match init {
        Init::Seed(seed) => SolverState::seeded(problem.x, n_clusters, hp.initial_penalty(n_clusters), seed),
        Init::State(s) => s,
    };
    state.check_dims(problem)?;

    let mut cache = FactorCache::new();
    let mut trace = OuterTrace::default();
    let mut prev_residuals: Option<FeasibilityResiduals> = None;
    let mut last = None;

    for k in 1..=hp.max_outer {
        let eps = hp.tolerance.eps(k);
        let outcome = pam_solve(state, problem, hp, eps, &mut cache);
        let residuals = FeasibilityResiduals::compute(&outcome.state, problem.x);
        let lagrangian = augmented_lagrangian_value(&outcome.state, problem, hp)?;
        let rho = outcome.state.rho;

        trace.push(
            OuterRecord {
                k,
                rho,
                eps,
                theta_inf: outcome.theta.inf_norm,
                residuals: residuals.inf_norms,
                inner_sweeps: outcome.sweeps,
                inner_converged: outcome.converged,
                lagrangian,
                eta: None,
                sweeps: outcome.log,
            },
            outcome.state.w.clone(),
        );
        if !outcome.converged {
            log::debug!("outer iteration {k}: inner loop hit {} sweeps, ‖Θ‖∞ = {:e}", outcome.sweeps, outcome.theta.inf_norm);
        }

        state = outcome.state;
        let stop = hp.early_stop.is_some_and(|tol| {
            outcome.theta.inf_norm <= tol && residuals.max_inf() <= tol
        });
        state.multipliers = update_multipliers(&state, &residuals, hp);
        state.rho = update_penalty(&residuals, prev_residuals.as_ref(), rho, hp);
        last = Some(outcome.theta);
        prev_residuals = Some(residuals);
        if stop {
            break;
        }
    }

    Ok(AlmOutcome {
        state,
        theta: last.expect("at least one outer iteration"),
        residuals: prev_residuals.expect("at least one outer iteration"),
        trace,
    })
}
