//! Closed-form minimizers of the six proximal block subproblems.
//!
//! Each update minimizes the augmented Lagrangian in one block, all other
//! blocks held at their current values, plus `(C/2)‖· − previous‖²_F`.

use log::warn;
use nalgebra::{Cholesky, DMatrix, Dyn};

use super::{HyperParams, Problem, SolverState};

/// Which linear system the W update factorizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WSolveMode {
    /// Woodbury form when `d > n`, direct form otherwise.
    #[default]
    Auto,
    /// Factor `a·I_d + ρXXᵀ`.
    Direct,
    /// Factor `I_n + (ρ/a)XᵀX` and apply the Woodbury identity.
    Woodbury,
}

enum WSystem {
    Direct(Cholesky<f64, Dyn>),
    Woodbury {
        ratio: f64,
        chol: Cholesky<f64, Dyn>,
    },
}

type Key = [u64; 3];

fn key(a: f64, b: f64, c: f64) -> Key {
    [a.to_bits(), b.to_bits(), c.to_bits()]
}

/// Cholesky factors of the W and Y systems for one problem. Both only
/// depend on `ρ`, `γ` and the proximal constants, so they are reused across
/// all sweeps that share those values.
#[derive(Default)]
pub struct FactorCache {
    mode: WSolveMode,
    gram: Option<DMatrix<f64>>,
    w: Option<(Key, WSystem)>,
    y: Option<(Key, Cholesky<f64, Dyn>)>,
    factorizations: usize,
}

impl FactorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_mode(mode: WSolveMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    /// Number of Cholesky factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    fn uses_woodbury(&self, d: usize, n: usize) -> bool {
        match self.mode {
            WSolveMode::Auto => d > n,
            WSolveMode::Direct => false,
            WSolveMode::Woodbury => true,
        }
    }

    fn w_system(&mut self, problem: &Problem<'_>, gamma: f64, rho: f64, c1: f64) -> &WSystem {
        let k = key(gamma, rho, c1);
        if self.w.as_ref().map(|(old, _)| *old != k).unwrap_or(true) {
            let (d, n) = (problem.n_features(), problem.n_samples());
            let woodbury = self.uses_woodbury(d, n);
            let gram = self.gram.get_or_insert_with(|| {
                if woodbury {
                    problem.x.transpose() * problem.x
                } else {
                    problem.x * problem.x.transpose()
                }
            });
            let a = 2.0 * gamma + rho + c1;
            let system = if woodbury {
                let ratio = rho / a;
                let m = DMatrix::identity(n, n) + &*gram * ratio;
                WSystem::Woodbury {
                    ratio,
                    chol: Cholesky::new(m).expect("I + (ρ/a)XᵀX is positive definite"),
                }
            } else {
                let m = DMatrix::identity(d, d) * a + &*gram * rho;
                WSystem::Direct(Cholesky::new(m).expect("aI + ρXXᵀ is positive definite"))
            };
            self.factorizations += 1;
            self.w = Some((k, system));
        }
        &self.w.as_ref().unwrap().1
    }

    fn y_system(&mut self, problem: &Problem<'_>, rho: f64, c4: f64) -> &Cholesky<f64, Dyn> {
        let k = key(rho, c4, 0.0);
        if self.y.as_ref().map(|(old, _)| *old != k).unwrap_or(true) {
            let n = problem.n_samples();
            let m = problem.laplacian * 2.0 + DMatrix::identity(n, n) * (3.0 * rho + c4);
            let chol = Cholesky::new(m).expect("2L + (3ρ + C)I is positive definite");
            self.factorizations += 1;
            self.y = Some((k, chol));
        }
        &self.y.as_ref().unwrap().1
    }
}

/// (a) Solves `(a·I + ρXXᵀ) W = Z` with `a = 2γ + ρ + C₁` and
/// `Z = Xλ̄₁ + λ̄₂ + ρX(Y − U) + ρV + C₁W_prev`.
pub fn update_w(
    state: &SolverState,
    problem: &Problem<'_>,
    hp: &HyperParams,
    c1: f64,
    cache: &mut FactorCache,
) -> DMatrix<f64> {
    let rho = state.rho;
    let m = &state.multipliers;
    let x = problem.x;
    let inner = &m.l1 + (&state.y - &state.u) * rho;
    let z = x * inner + &m.l2 + &state.v * rho + &state.w * c1;
    let a = 2.0 * hp.gamma + rho + c1;
    match cache.w_system(problem, hp.gamma, rho, c1) {
        WSystem::Direct(chol) => chol.solve(&z),
        WSystem::Woodbury { ratio, chol } => {
            let correction = x * chol.solve(&(x.transpose() * &z)) * *ratio;
            (z - correction) / a
        }
    }
}

/// Row-wise group soft-thresholding around the proximal blend of `target`
/// and `prev`:
/// `row_i = max(0, 1 − weight/‖ρ·t_i + C·p_i‖) · (ρ·t_i + C·p_i)/(ρ + C)`.
fn group_shrink(target: &DMatrix<f64>, prev: &DMatrix<f64>, rho: f64, c: f64, weight: f64) -> DMatrix<f64> {
    let kappa = c / (rho + c);
    let mut out = target + (prev - target) * kappa;
    for mut row in out.row_iter_mut() {
        let norm = row.norm() * (rho + c);
        let factor = if norm > weight { 1.0 - weight / norm } else { 0.0 };
        row *= factor;
    }
    out
}

/// (b) Group soft-thresholding of `N = Y − XᵀW + λ̄₁/ρ` blended with `U_prev`.
pub fn update_u(state: &SolverState, problem: &Problem<'_>, hp: &HyperParams, c2: f64) -> DMatrix<f64> {
    let rho = state.rho;
    let target = &state.y - problem.x.transpose() * &state.w + &state.multipliers.l1 / rho;
    group_shrink(&target, &state.u, rho, c2, hp.alpha)
}

/// (c) Group soft-thresholding of `M = W − λ̄₂/ρ` blended with `V_prev`.
pub fn update_v(state: &SolverState, hp: &HyperParams, c3: f64) -> DMatrix<f64> {
    let rho = state.rho;
    let target = &state.w - &state.multipliers.l2 / rho;
    group_shrink(&target, &state.v, rho, c3, hp.beta)
}

/// (d) Solves `(2L + (3ρ + C₄)I) Y = P` with
/// `P = λ̄₄ − λ̄₃ − λ̄₁ + ρ(XᵀW + U + F + Ŷ) + C₄Y_prev`.
pub fn update_y(
    state: &SolverState,
    problem: &Problem<'_>,
    c4: f64,
    cache: &mut FactorCache,
) -> DMatrix<f64> {
    let rho = state.rho;
    let m = &state.multipliers;
    let anchors = problem.x.transpose() * &state.w + &state.u + &state.f + &state.y_hat;
    let p = &m.l4 - &m.l3 - &m.l1 + anchors * rho + &state.y * c4;
    cache.y_system(problem, rho, c4).solve(&p)
}

/// (e) Elementwise projection onto `[0, 1]` of the blend of `Y + λ̄₃/ρ` and
/// `F_prev`.
pub fn update_f(state: &SolverState, c5: f64) -> DMatrix<f64> {
    let rho = state.rho;
    let target = &state.y + &state.multipliers.l3 / rho;
    let blend = &target + (&state.f - &target) * (c5 / (rho + c5));
    blend.map(|v| v.clamp(0.0, 1.0))
}

/// (f) Nearest matrix with orthonormal columns to the blend `B` of
/// `Y − λ̄₄/ρ` and `Ŷ_prev`: `Ŷ = UVᵀ` from the thin SVD `B = UΣVᵀ`.
pub fn update_y_hat(state: &SolverState, c6: f64) -> DMatrix<f64> {
    let rho = state.rho;
    let target = &state.y - &state.multipliers.l4 / rho;
    let blend = &target + (&state.y_hat - &target) * (c6 / (rho + c6));
    nearest_orthonormal(blend)
}

/// Polar factor of a tall matrix. A rank-deficient input has no unique
/// projection; any completion from the SVD is accepted.
pub(crate) fn nearest_orthonormal(b: DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = b.shape();
    let scale = b.amax();
    let svd = b.svd(true, true);
    let smin = svd.singular_values.min();
    if smin <= f64::EPSILON * n.max(c) as f64 * scale {
        warn!("rank-deficient matrix in orthonormal projection (σ_min = {smin:e}); factor completed arbitrarily");
    }
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let q = u * v_t;
    if super::stiefel_violation(&q) > 1e-12 {
        // Re-orthonormalize columns that the SVD left degenerate.
        return q.qr().q();
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{stiefel_violation, Multipliers};

    fn state_with(n: usize, d: usize, c: usize, rho: f64) -> SolverState {
        let mut y_hat = DMatrix::zeros(n, c);
        for j in 0..c {
            y_hat[(j, j)] = 1.0;
        }
        SolverState {
            w: DMatrix::zeros(d, c),
            u: DMatrix::zeros(n, c),
            v: DMatrix::zeros(d, c),
            y: DMatrix::zeros(n, c),
            f: DMatrix::zeros(n, c),
            y_hat,
            multipliers: Multipliers::zeros(n, d, c),
            rho,
        }
    }

    fn filled(r: usize, c: usize, seed: f64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |i, j| ((i * 7 + j * 3) as f64 * 0.37 + seed).sin())
    }

    #[test]
    fn w_with_zero_data_is_scaled_z() {
        let (n, d, c) = (4, 3, 2);
        let x = DMatrix::zeros(d, n);
        let l = DMatrix::zeros(n, n);
        let p = Problem::new(&x, &l).unwrap();
        let hp = HyperParams { gamma: 0.3, ..Default::default() };
        let mut s = state_with(n, d, c, 2.0);
        s.v = filled(d, c, 0.1);
        s.w = filled(d, c, 0.7);
        s.multipliers.l2 = filled(d, c, 1.3);
        let c1 = 0.5;
        let a = 2.0 * 0.3 + 2.0 + c1;
        let expect = (&s.multipliers.l2 + &s.v * 2.0 + &s.w * c1) / a;
        for mode in [WSolveMode::Direct, WSolveMode::Woodbury] {
            let w = update_w(&s, &p, &hp, c1, &mut FactorCache::with_mode(mode));
            assert!((w - &expect).amax() < 1e-14);
        }
    }

    #[test]
    fn u_row_example() {
        // ρ = 1, C = 1, α = 2√2, n_i = (3, 4), U_prev,i = (1, 0) → (1, 1).
        let n_rows = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let prev = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let out = group_shrink(&n_rows, &prev, 1.0, 1.0, 2.0 * 2f64.sqrt());
        assert!((out[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((out[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shrink_kills_small_rows_and_is_identity_without_weight() {
        let target = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 3.0, -1.0]);
        let prev = DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 1.0, 1.0]);
        let (rho, c) = (2.0, 0.5);
        let t0 = DMatrix::from_row_slice(1, 2, &[rho * 0.1 + c * 0.0, rho * 0.2 + c * 0.1]);
        let big = t0.norm();
        let out = group_shrink(&target, &prev, rho, c, big);
        assert_eq!(out.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        let out = group_shrink(&target, &prev, rho, c, 0.0);
        let blend = (&target * rho + &prev * c) / (rho + c);
        assert!((out - blend).amax() < 1e-15);
    }

    #[test]
    fn zero_row_maps_to_zero() {
        let target = DMatrix::from_row_slice(1, 2, &[-0.25, 0.5]);
        let prev = DMatrix::from_row_slice(1, 2, &[0.5, -1.0]);
        // ρ·t + C·p = 0 with ρ = 2, C = 1.
        let out = group_shrink(&target, &prev, 2.0, 1.0, 0.0);
        assert_eq!(out.amax(), 0.0);
    }

    #[test]
    fn y_without_graph_is_diagonal_solve() {
        let (n, d, c) = (5, 3, 2);
        let x = filled(d, n, 0.2);
        let l = DMatrix::zeros(n, n);
        let p = Problem::new(&x, &l).unwrap();
        let mut s = state_with(n, d, c, 1.7);
        s.w = filled(d, c, 0.4);
        s.u = filled(n, c, 0.9);
        s.f = filled(n, c, 1.9).map(|v| v.clamp(0.0, 1.0));
        s.y = filled(n, c, 2.5);
        let c4 = 0.5;
        let pm = (x.transpose() * &s.w + &s.u + &s.f + &s.y_hat) * 1.7 + &s.y * c4;
        let expect = pm / (3.0 * 1.7 + c4);
        let y = update_y(&s, &p, c4, &mut FactorCache::new());
        assert!((y - expect).amax() < 1e-14);
    }

    #[test]
    fn f_clamps() {
        let mut s = state_with(3, 1, 1, 1.0);
        s.y = DMatrix::from_column_slice(3, 1, &[-0.3, 1.7, 0.42]);
        s.f = s.y.clone();
        let f = update_f(&s, 0.5);
        assert_eq!(f.as_slice(), &[0.0, 1.0, 0.42]);
    }

    #[test]
    fn f_fixed_point() {
        let mut s = state_with(4, 2, 2, 1.3);
        s.multipliers.l3 = filled(4, 2, 0.3) * 0.1;
        let g = filled(4, 2, 0.8).map(|v| 0.5 + 0.4 * v);
        s.y = &g - &s.multipliers.l3 / 1.3;
        s.f = g.clone();
        assert!((update_f(&s, 0.5) - g).amax() < 1e-15);
    }

    #[test]
    fn y_hat_normalizes_a_vector() {
        let mut s = state_with(2, 1, 1, 1.0);
        s.y = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        s.y_hat = DMatrix::from_column_slice(2, 1, &[0.6, 0.8]);
        // B = (3·1 + 0.5·(0.6, 0.8)) / 1.5 is parallel to (3, 4).
        let out = update_y_hat(&s, 0.5);
        assert!((out[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((out[(1, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn y_hat_fixes_orthonormal_input() {
        let q = filled(6, 3, 0.1).qr().q();
        let out = nearest_orthonormal(q.clone());
        assert!((out - q).amax() < 1e-14);
    }

    #[test]
    fn y_hat_rank_deficient_still_orthonormal() {
        let mut b = DMatrix::zeros(5, 3);
        b[(0, 0)] = 1.0;
        b[(1, 1)] = 2.0;
        let out = nearest_orthonormal(b);
        assert!(stiefel_violation(&out) <= 1e-10);
        assert!((out[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((out[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_refactors_only_on_penalty_change() {
        let (n, d, c) = (6, 4, 2);
        let x = filled(d, n, 0.5);
        let l = DMatrix::identity(n, n) * 0.5;
        let p = Problem::new(&x, &l).unwrap();
        let hp = HyperParams::default();
        let mut cache = FactorCache::new();
        let mut s = state_with(n, d, c, 1.0);
        for _ in 0..3 {
            update_w(&s, &p, &hp, 0.5, &mut cache);
            update_y(&s, &p, 0.5, &mut cache);
        }
        assert_eq!(cache.factorizations(), 2);
        s.rho = 1.01;
        update_w(&s, &p, &hp, 0.5, &mut cache);
        update_y(&s, &p, 0.5, &mut cache);
        assert_eq!(cache.factorizations(), 4);
    }
}
