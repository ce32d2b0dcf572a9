use super::blocks::{update_f, update_u, update_v, update_w, update_y, update_y_hat, FactorCache};
use super::{augmented_lagrangian_value, compute_theta, HyperParams, Problem, SolverState, ThetaResidual};

/// Diagnostics of one inner sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub theta_inf: f64,
    /// Augmented Lagrangian after the sweep, when tracking is enabled.
    pub lagrangian: Option<f64>,
    /// `‖T^j − T^{j−1}‖²_F` over all six primal blocks.
    pub step_sq: f64,
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct PamOutcome {
    pub state: SolverState,
    pub theta: ThetaResidual,
    pub sweeps: usize,
    /// `false` when `max_inner` sweeps ran without reaching the tolerance.
    pub converged: bool,
    /// Augmented Lagrangian at the starting point, when tracking is enabled.
    pub initial_lagrangian: Option<f64>,
    pub log: Vec<SweepRecord>,
}

/// One Gauss–Seidel pass over the blocks in the order W, U, V, Y, F, Ŷ.
pub fn sweep(state: &mut SolverState, problem: &Problem<'_>, hp: &HyperParams, cache: &mut FactorCache) {
    let c = hp.proximal;
    state.w = update_w(state, problem, hp, c, cache);
    state.u = update_u(state, problem, hp, c);
    state.v = update_v(state, hp, c);
    state.y = update_y(state, problem, c, cache);
    state.f = update_f(state, c);
    state.y_hat = update_y_hat(state, c);
}

/// Repeats sweeps until `‖Θ‖∞ ≤ eps` or `hp.max_inner` sweeps have run.
/// At least one sweep is always performed. On hitting the cap the last
/// iterate is returned with `converged = false`; by the descent property it
/// is also the one with the lowest augmented Lagrangian.
pub fn pam_solve(
    state0: SolverState,
    problem: &Problem<'_>,
    hp: &HyperParams,
    eps: f64,
    cache: &mut FactorCache,
) -> PamOutcome {
    let lagrangian = |s: &SolverState| {
        hp.track_lagrangian
            .then(|| augmented_lagrangian_value(s, problem, hp).expect("state dimensions fixed by the caller"))
    };
    let initial_lagrangian = lagrangian(&state0);
    let mut state = state0;
    let mut log = Vec::new();
    loop {
        let prev = state.clone();
        sweep(&mut state, problem, hp, cache);
        let theta = compute_theta(&prev, &state, problem, hp.proximal);
        log.push(SweepRecord {
            theta_inf: theta.inf_norm,
            lagrangian: lagrangian(&state),
            step_sq: state.primal_sq_distance(&prev),
        });
        let converged = theta.inf_norm <= eps;
        if converged || log.len() >= hp.max_inner {
            return PamOutcome {
                state,
                theta,
                sweeps: log.len(),
                converged,
                initial_lagrangian,
                log,
            };
        }
    }
}
