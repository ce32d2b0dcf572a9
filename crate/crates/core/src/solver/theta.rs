use nalgebra::DMatrix;

use super::{Problem, SolverState};

/// The element of the limiting subdifferential produced by one inner sweep,
/// one block per primal variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaResidual {
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub y_hat: DMatrix<f64>,
    pub inf_norm: f64,
}

impl ThetaResidual {
    pub fn blocks(&self) -> [&DMatrix<f64>; 6] {
        [&self.w, &self.u, &self.v, &self.y, &self.f, &self.y_hat]
    }

    fn from_blocks(
        w: DMatrix<f64>,
        u: DMatrix<f64>,
        v: DMatrix<f64>,
        y: DMatrix<f64>,
        f: DMatrix<f64>,
        y_hat: DMatrix<f64>,
    ) -> Self {
        let inf_norm = [&w, &u, &v, &y, &f, &y_hat]
            .iter()
            .map(|m| m.amax())
            .fold(0.0, f64::max);
        Self {
            w,
            u,
            v,
            y,
            f,
            y_hat,
            inf_norm,
        }
    }
}

/// Residual between two consecutive sweeps (`prev` = iterate `j − 1`,
/// `next` = iterate `j`) with proximal constant `c` for every block. The
/// penalty is taken from `next`.
pub fn compute_theta(
    prev: &SolverState,
    next: &SolverState,
    problem: &Problem<'_>,
    c: f64,
) -> ThetaResidual {
    let rho = next.rho;
    let dy = &prev.y - &next.y;
    let du = &prev.u - &next.u;
    let dv = &prev.v - &next.v;
    let dw = &prev.w - &next.w;
    let df = &prev.f - &next.f;
    let dyh = &prev.y_hat - &next.y_hat;

    let t1 = problem.x * (&dy - &du) * rho + &dv * rho + &dw * c;
    let t2 = &dy * rho + &du * c;
    let t3 = dv * c;
    let t4 = (&df + &dyh) * rho + &dy * c;
    let t5 = df * c;
    let t6 = dyh * c;
    ThetaResidual::from_blocks(t1, t2, t3, t4, t5, t6)
}
