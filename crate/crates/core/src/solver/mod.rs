//! Splitting model state, the six closed-form proximal block updates and the
//! inner proximal alternating minimization loop.
//!
//! The split problem carries six primal blocks
//!
//! ```text
//! W (d×c)   transformation            U (n×c)  copy of Y − XᵀW
//! V (d×c)   copy of W                 Y (n×c)  scaled cluster indicator
//! F (n×c)   box copy, 0 ≤ F ≤ 1       Ŷ (n×c)  orthonormal copy, ŶᵀŶ = I
//! ```
//!
//! coupled through four linear constraints `Y − XᵀW − U = 0`, `V − W = 0`,
//! `Y − F = 0` and `Ŷ − Y = 0`, each with a multiplier block.

mod blocks;
mod lagrangian;
mod pam;
mod theta;

pub use blocks::{
    update_f, update_u, update_v, update_w, update_y, update_y_hat, FactorCache, WSolveMode,
};
pub use lagrangian::{augmented_lagrangian_value, l21_norm, stiefel_violation};
pub use pam::{pam_solve, sweep, PamOutcome, SweepRecord};
pub use theta::{compute_theta, ThetaResidual};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::AffinityGraph;

/// Tolerance used when deciding whether `Ŷ` sits on the Stiefel manifold.
pub const STIEFEL_TOL: f64 = 1e-8;

/// Read-only inputs of one solve: the data matrix and the graph Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub x: &'a DMatrix<f64>,
    pub laplacian: &'a DMatrix<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(x: &'a DMatrix<f64>, laplacian: &'a DMatrix<f64>) -> Result<Self> {
        let n = x.ncols();
        if laplacian.shape() != (n, n) {
            return Err(Error::dims(format!(
                "laplacian is {:?}, expected {n}×{n}",
                laplacian.shape()
            )));
        }
        Ok(Self { x, laplacian })
    }

    pub fn from_parts(data: &'a DataMatrix, graph: &'a AffinityGraph) -> Result<Self> {
        let laplacian = graph
            .laplacian
            .as_ref()
            .ok_or_else(|| Error::param("graph has no Laplacian; call normalized_laplacian first"))?;
        Self::new(data.x(), laplacian)
    }

    pub fn n_features(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.x.ncols()
    }
}

/// Inner tolerance sequence `ε_k`, indexed from `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceSchedule {
    /// `ε_k = scale · ratio^k`
    Geometric { scale: f64, ratio: f64 },
    /// Same tolerance for every outer iteration.
    Constant(f64),
}

impl ToleranceSchedule {
    pub fn eps(&self, k: usize) -> f64 {
        match *self {
            ToleranceSchedule::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            ToleranceSchedule::Constant(eps) => eps,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ToleranceSchedule::Geometric { scale, ratio } => {
                if !(scale > 0.0 && scale.is_finite() && ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::param(format!(
                        "geometric tolerance needs scale > 0 and ratio in (0, 1), got {scale}, {ratio}"
                    )));
                }
            }
            ToleranceSchedule::Constant(eps) => {
                if !(eps > 0.0) {
                    return Err(Error::param(format!("tolerance must be positive, got {eps}")));
                }
            }
        }
        Ok(())
    }
}

/// Model weights, outer-loop schedule and proximal constant.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Weight of `‖U‖₂,₁` (the regression loss).
    pub alpha: f64,
    /// Weight of `‖V‖₂,₁` (row sparsity of W).
    pub beta: f64,
    /// Weight of `‖W‖²_F`.
    pub gamma: f64,
    /// Required residual decrease factor before the penalty is left alone.
    pub tau: f64,
    /// Penalty growth factor `r > 1`.
    pub growth: f64,
    /// Initial penalty. `None` means `c / 2`.
    pub rho_init: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tolerance: ToleranceSchedule,
    /// Proximal constant shared by all six blocks.
    pub proximal: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Stop the outer loop once both stationarity and infeasibility drop
    /// below this value.
    pub early_stop: Option<f64>,
    /// Evaluate the augmented Lagrangian after every inner sweep.
    pub track_lagrangian: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            tau: 0.99,
            growth: 1.01,
            rho_init: None,
            lambda_min: -100.0,
            lambda_max: 100.0,
            tolerance: ToleranceSchedule::Geometric {
                scale: 1.0,
                ratio: 0.995,
            },
            proximal: 0.5,
            max_outer: 20,
            max_inner: 500,
            early_stop: None,
            track_lagrangian: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::param(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::param(format!("penalty growth must exceed 1, got {}", self.growth)));
        }
        if let Some(rho) = self.rho_init {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::param(format!("initial penalty must be positive, got {rho}")));
            }
        }
        if !(self.lambda_min.is_finite()
            && self.lambda_max.is_finite()
            && self.lambda_min < self.lambda_max)
        {
            return Err(Error::param(format!(
                "multiplier bounds must satisfy min < max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if !(self.proximal > 0.0 && self.proximal.is_finite()) {
            return Err(Error::param(format!(
                "proximal constant must be positive, got {}",
                self.proximal
            )));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::param("iteration caps must be at least 1"));
        }
        self.tolerance.validate()
    }

    pub fn initial_penalty(&self, n_clusters: usize) -> f64 {
        self.rho_init.unwrap_or(n_clusters as f64 / 2.0)
    }
}

/// Multiplier blocks for the four coupling constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    /// For `Y − XᵀW − U` (n×c).
    pub l1: DMatrix<f64>,
    /// For `V − W` (d×c).
    pub l2: DMatrix<f64>,
    /// For `Y − F` (n×c).
    pub l3: DMatrix<f64>,
    /// For `Ŷ − Y` (n×c).
    pub l4: DMatrix<f64>,
}

impl Multipliers {
    pub fn zeros(n: usize, d: usize, c: usize) -> Self {
        Self {
            l1: DMatrix::zeros(n, c),
            l2: DMatrix::zeros(d, c),
            l3: DMatrix::zeros(n, c),
            l4: DMatrix::zeros(n, c),
        }
    }

    pub fn blocks(&self) -> [&DMatrix<f64>; 4] {
        [&self.l1, &self.l2, &self.l3, &self.l4]
    }
}

/// All primal blocks plus multipliers and penalty of one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub y_hat: DMatrix<f64>,
    pub multipliers: Multipliers,
    pub rho: f64,
}

impl SolverState {
    /// Seeded starting point: `Ŷ` is the orthonormal factor of a Gaussian
    /// `n×c` draw, `Y = Ŷ`, `F = clamp(Y, 0, 1)`, `W = V = 0`, `U = Y − XᵀW`
    /// and zero multipliers.
    pub fn seeded(x: &DMatrix<f64>, n_clusters: usize, rho: f64, seed: u64) -> Self {
        let (d, n) = x.shape();
        let c = n_clusters;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = DMatrix::from_fn(n, c, |_, _| StandardNormal.sample(&mut rng));
        let y_hat = gauss.qr().q();
        let y = y_hat.clone();
        let f = y.map(|v: f64| v.clamp(0.0, 1.0));
        let w = DMatrix::zeros(d, c);
        let u = &y - x.transpose() * &w;
        Self {
            w,
            u,
            v: DMatrix::zeros(d, c),
            y,
            f,
            y_hat,
            multipliers: Multipliers::zeros(n, d, c),
            rho,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.w.ncols()
    }

    pub fn check_dims(&self, problem: &Problem<'_>) -> Result<()> {
        let (d, n, c) = (problem.n_features(), problem.n_samples(), self.n_clusters());
        let expect = [
            ("W", &self.w, (d, c)),
            ("U", &self.u, (n, c)),
            ("V", &self.v, (d, c)),
            ("Y", &self.y, (n, c)),
            ("F", &self.f, (n, c)),
            ("Yhat", &self.y_hat, (n, c)),
            ("lambda1", &self.multipliers.l1, (n, c)),
            ("lambda2", &self.multipliers.l2, (d, c)),
            ("lambda3", &self.multipliers.l3, (n, c)),
            ("lambda4", &self.multipliers.l4, (n, c)),
        ];
        for (name, m, shape) in expect {
            if m.shape() != shape {
                return Err(Error::dims(format!(
                    "{name} is {:?}, expected {:?}",
                    m.shape(),
                    shape
                )));
            }
        }
        if !(self.rho > 0.0) {
            return Err(Error::param(format!("penalty must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    /// Squared Frobenius distance between the primal blocks of two states.
    pub fn primal_sq_distance(&self, other: &SolverState) -> f64 {
        (&self.w - &other.w).norm_squared()
            + (&self.u - &other.u).norm_squared()
            + (&self.v - &other.v).norm_squared()
            + (&self.y - &other.y).norm_squared()
            + (&self.f - &other.f).norm_squared()
            + (&self.y_hat - &other.y_hat).norm_squared()
    }
}
