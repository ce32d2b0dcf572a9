//! Test-side oracles written independently of the library's own formulas.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ufs_core::prelude::*;
use ufs_core::solver::{
    update_f, update_u, update_v, update_w, update_y, update_y_hat, FactorCache, Multipliers,
};
use ufs_core::synthetic::{planted_clusters, Planted, PlantedSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(lo..hi))
}

pub fn orthonormal(rng: &mut ChaCha8Rng, n: usize, c: usize) -> DMatrix<f64> {
    retract(uniform(rng, n, c, -1.0, 1.0))
}

/// Polar factor via an explicit eigen-decomposition of `BᵀB`.
pub fn retract(b: DMatrix<f64>) -> DMatrix<f64> {
    let eig = (b.transpose() * &b).symmetric_eigen();
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    &b * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

/// `I − D^{-1/2} S D^{-1/2}` of a random symmetric nonnegative weight matrix.
pub fn random_laplacian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if rng.random_bool(0.6) { rng.random_range(0.05..1.0) } else { 0.0 };
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| s.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if deg[i] == 0.0 || deg[j] == 0.0 {
            0.0
        } else if i == j {
            1.0
        } else {
            -s[(i, j)] / (deg[i] * deg[j]).sqrt()
        }
    })
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

fn row_norm_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt())
        .sum()
}

fn xt_w(x: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, n) = x.shape();
    DMatrix::from_fn(n, w.ncols(), |i, j| (0..d).map(|k| x[(k, i)] * w[(k, j)]).sum())
}

/// Augmented Lagrangian without the set constraints, evaluated with loops.
/// `with_l21 = false` drops the two nonsmooth terms.
pub fn naive_lagrangian(x: &DMatrix<f64>, l: &DMatrix<f64>, s: &SolverState, hp: &HyperParams, with_l21: bool) -> f64 {
    let n = l.nrows();
    let c = s.y.ncols();
    let mut smooth = 0.0;
    for j in 0..c {
        for a in 0..n {
            for b in 0..n {
                smooth += s.y[(a, j)] * l[(a, b)] * s.y[(b, j)];
            }
        }
    }
    let r1 = &s.y - xt_w(x, &s.w) - &s.u;
    let r2 = &s.v - &s.w;
    let r3 = &s.y - &s.f;
    let r4 = &s.y_hat - &s.y;
    let m = &s.multipliers;
    let mut total = smooth + hp.gamma * frob_dot(&s.w, &s.w);
    if with_l21 {
        total += hp.alpha * row_norm_sum(&s.u) + hp.beta * row_norm_sum(&s.v);
    }
    total += frob_dot(&m.l1, &r1) + frob_dot(&m.l2, &r2) + frob_dot(&m.l3, &r3) + frob_dot(&m.l4, &r4);
    total += 0.5 * s.rho * (frob_dot(&r1, &r1) + frob_dot(&r2, &r2) + frob_dot(&r3, &r3) + frob_dot(&r4, &r4));
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    W,
    U,
    V,
    Y,
    F,
    YHat,
}

pub const BLOCKS: [Block; 6] = [Block::W, Block::U, Block::V, Block::Y, Block::F, Block::YHat];

pub fn get(s: &SolverState, b: Block) -> &DMatrix<f64> {
    match b {
        Block::W => &s.w,
        Block::U => &s.u,
        Block::V => &s.v,
        Block::Y => &s.y,
        Block::F => &s.f,
        Block::YHat => &s.y_hat,
    }
}

pub fn with_block(s: &SolverState, b: Block, m: DMatrix<f64>) -> SolverState {
    let mut t = s.clone();
    match b {
        Block::W => t.w = m,
        Block::U => t.u = m,
        Block::V => t.v = m,
        Block::Y => t.y = m,
        Block::F => t.f = m,
        Block::YHat => t.y_hat = m,
    }
    t
}

/// One tiny random subproblem: data, Laplacian, a current iterate and
/// model weights.
pub struct Tiny {
    pub x: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub state: SolverState,
    pub hp: HyperParams,
    pub c: f64,
}

impl Tiny {
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let d = r.random_range(1..=6);
        let n = r.random_range(2..=8);
        let c = r.random_range(1..=3.min(n));
        let x = uniform(&mut r, d, n, -2.0, 2.0);
        let l = random_laplacian(&mut r, n);
        let lam = |rows: usize, r: &mut ChaCha8Rng| uniform(r, rows, c, -1.0, 1.0);
        let multipliers = Multipliers {
            l1: lam(n, &mut r),
            l2: lam(d, &mut r),
            l3: lam(n, &mut r),
            l4: lam(n, &mut r),
        };
        let state = SolverState {
            w: uniform(&mut r, d, c, -1.0, 1.0),
            u: uniform(&mut r, n, c, -1.0, 1.0),
            v: uniform(&mut r, d, c, -1.0, 1.0),
            y: uniform(&mut r, n, c, -1.0, 1.0),
            f: uniform(&mut r, n, c, 0.0, 1.0),
            y_hat: orthonormal(&mut r, n, c),
            multipliers,
            rho: r.random_range(0.3..3.0),
        };
        // Wide weight ranges so both branches of the group shrinkage occur.
        let hp = HyperParams {
            alpha: 10f64.powf(r.random_range(-2.0..0.7)),
            beta: 10f64.powf(r.random_range(-2.0..0.7)),
            gamma: r.random_range(0.0..2.0),
            ..HyperParams::default()
        };
        let c_prox = r.random_range(0.1..1.5);
        Self {
            x,
            l,
            state,
            hp,
            c: c_prox,
        }
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem::new(&self.x, &self.l).unwrap()
    }

    pub fn update(&self, b: Block) -> DMatrix<f64> {
        let p = self.problem();
        let mut cache = FactorCache::new();
        let s = &self.state;
        match b {
            Block::W => update_w(s, &p, &self.hp, self.c, &mut cache),
            Block::U => update_u(s, &p, &self.hp, self.c),
            Block::V => update_v(s, &self.hp, self.c),
            Block::Y => update_y(s, &p, self.c, &mut cache),
            Block::F => update_f(s, self.c),
            Block::YHat => update_y_hat(s, self.c),
        }
    }

    /// Block subproblem objective: Lagrangian in block `b` with the other
    /// blocks fixed, plus the proximal term around the current value.
    pub fn objective(&self, b: Block, m: &DMatrix<f64>, with_l21: bool) -> f64 {
        let prev = get(&self.state, b);
        let t = with_block(&self.state, b, m.clone());
        naive_lagrangian(&self.x, &self.l, &t, &self.hp, with_l21) + 0.5 * self.c * (m - prev).norm_squared()
    }

    /// Central finite-difference gradient of the smooth part of the block
    /// objective.
    pub fn fd_gradient(&self, b: Block, m: &DMatrix<f64>) -> DMatrix<f64> {
        let h = 1e-5;
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            let mut p = m.clone();
            p[(i, j)] += h;
            let mut q = m.clone();
            q[(i, j)] -= h;
            (self.objective(b, &p, false) - self.objective(b, &q, false)) / (2.0 * h)
        })
    }

    /// Largest violation of the first-order optimality conditions of block
    /// `b` at `m`.
    pub fn optimality_violation(&self, b: Block, m: &DMatrix<f64>) -> f64 {
        let g = self.fd_gradient(b, m);
        match b {
            Block::W | Block::Y => g.amax(),
            Block::U | Block::V => {
                let weight = if b == Block::U { self.hp.alpha } else { self.hp.beta };
                let mut worst: f64 = 0.0;
                for i in 0..m.nrows() {
                    let row = m.row(i);
                    let grow = g.row(i);
                    let norm = row.norm();
                    let v = if norm > 0.0 {
                        (grow + row * (weight / norm)).amax()
                    } else {
                        (grow.norm() - weight).max(0.0)
                    };
                    worst = worst.max(v);
                }
                worst
            }
            Block::F => {
                let mut worst: f64 = 0.0;
                for (k, &f) in m.iter().enumerate() {
                    let gk = g[k];
                    let v = if f <= 0.0 {
                        (-gk).max(0.0)
                    } else if f >= 1.0 {
                        gk.max(0.0)
                    } else {
                        gk.abs()
                    };
                    worst = worst.max(v);
                }
                worst.max(m.iter().map(|&f| (-f).max(f - 1.0).max(0.0)).fold(0.0, f64::max))
            }
            Block::YHat => {
                let sym = {
                    let a = m.transpose() * &g;
                    (&a + a.transpose()) * 0.5
                };
                let c = m.ncols();
                let stiefel = (m.transpose() * m - DMatrix::identity(c, c)).amax();
                (&g - m * sym).amax().max(stiefel)
            }
        }
    }

    /// Random perturbation of `m` kept inside the block's feasible set.
    pub fn perturb(&self, b: Block, m: &DMatrix<f64>, rng: &mut ChaCha8Rng, size: f64) -> DMatrix<f64> {
        let p = m + uniform(rng, m.nrows(), m.ncols(), -size, size);
        match b {
            Block::F => p.map(|v| v.clamp(0.0, 1.0)),
            Block::YHat => retract(p),
            _ => p,
        }
    }
}

/// Instance shared by the descent, inner-convergence, feasibility and
/// stability checks: n = 60, d = 30, c = 3, standardized.
pub const SOLVER_INSTANCE: PlantedSpec = PlantedSpec {
    n_samples: 60,
    n_informative: 10,
    n_noise: 20,
    n_clusters: 3,
    separation: 2.0,
};
pub const SOLVER_DATA_SEED: u64 = 4;
pub const SOLVER_INIT_SEED: u64 = 0;

pub fn solver_hp() -> HyperParams {
    HyperParams {
        alpha: 0.1,
        beta: 0.1,
        gamma: 1.0,
        ..HyperParams::default()
    }
}

pub fn solver_instance(data_seed: u64) -> DataMatrix {
    planted_clusters(&SOLVER_INSTANCE, data_seed).unwrap().data.standardized()
}

/// 3 clusters separated in 10 of 100 features, n = 150.
pub const RECOVERY_INSTANCE: PlantedSpec = PlantedSpec {
    n_samples: 150,
    n_informative: 10,
    n_noise: 90,
    n_clusters: 3,
    separation: 2.0,
};
pub const RECOVERY_DATA_SEED: u64 = 1;

pub fn recovery_instance(data_seed: u64) -> Planted {
    let mut p = planted_clusters(&RECOVERY_INSTANCE, data_seed).unwrap();
    p.data = p.data.standardized();
    p
}
