use nalgebra::DMatrix;

use super::{HyperParams, Problem, SolverState, STIEFEL_TOL};
use crate::error::Result;

/// Sum of the Euclidean norms of the rows.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).sum()
}

/// `‖ŶᵀŶ − I‖∞` (max absolute entry).
pub fn stiefel_violation(y_hat: &DMatrix<f64>) -> f64 {
    let gram = y_hat.transpose() * y_hat;
    let c = gram.nrows();
    (gram - DMatrix::identity(c, c)).amax()
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Value of the augmented Lagrangian at `state` (using the state's own
/// multipliers and penalty). Returns `+∞` when `F` leaves the unit box or `Ŷ`
/// leaves the Stiefel manifold.
pub fn augmented_lagrangian_value(
    state: &SolverState,
    problem: &Problem<'_>,
    hp: &HyperParams,
) -> Result<f64> {
    state.check_dims(problem)?;
    if state.f.iter().any(|&v| !(0.0..=1.0).contains(&v))
        || stiefel_violation(&state.y_hat) > STIEFEL_TOL
    {
        return Ok(f64::INFINITY);
    }
    let SolverState {
        w,
        u,
        v,
        y,
        f,
        y_hat,
        multipliers: m,
        rho,
    } = state;

    let r1 = y - problem.x.transpose() * w - u;
    let r2 = v - w;
    let r3 = y - f;
    let r4 = y_hat - y;

    let smoothness = (problem.laplacian * y).dot(y);
    let objective =
        smoothness + hp.alpha * l21_norm(u) + hp.beta * l21_norm(v) + hp.gamma * w.norm_squared();
    let coupling = dot(&m.l1, &r1) + dot(&m.l2, &r2) + dot(&m.l3, &r3) + dot(&m.l4, &r4);
    let penalty = 0.5
        * rho
        * (r1.norm_squared() + r2.norm_squared() + r3.norm_squared() + r4.norm_squared());
    Ok(objective + coupling + penalty)
}
