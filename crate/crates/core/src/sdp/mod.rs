//! Dense semidefinite programming over Hermitian matrices.
//!
//! Problems have the form
//!
//! ```text
//! min Tr(CX)  s.t.  Tr(AₖX) = bₖ  or  Tr(AₖX) ≥ bₖ,   X ⪰ 0
//! ```
//!
//! and are solved through the real symmetric embedding
//! `M ↦ [[Re M, −Im M], [Im M, Re M]]`.

mod ipm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix, CVector};
use ipm::{IpmSettings, RealSdp, RealStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Equal,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub a: CMatrix,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub c: CMatrix,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(c: CMatrix) -> Self {
        Self {
            c,
            constraints: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn equal(mut self, a: CMatrix, rhs: f64) -> Self {
        self.constraints.push(Constraint {
            a,
            sense: Sense::Equal,
            rhs,
        });
        self
    }

    pub fn at_least(mut self, a: CMatrix, rhs: f64) -> Self {
        self.constraints.push(Constraint {
            a,
            sense: Sense::AtLeast,
            rhs,
        });
        self
    }

    /// `Tr(AX) ≤ rhs`, stored as `Tr(−AX) ≥ −rhs`.
    pub fn at_most(self, a: CMatrix, rhs: f64) -> Self {
        self.at_least(-a, -rhs)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if !self.c.is_square() {
            return Err(Error::NotSquare {
                rows: self.c.nrows(),
                cols: self.c.ncols(),
            });
        }
        check_hermitian(&self.c)?;
        for (k, con) in self.constraints.iter().enumerate() {
            if con.a.nrows() != n || con.a.ncols() != n {
                return Err(Error::Dimension(format!(
                    "constraint {k} is {}x{}, objective is {n}x{n}",
                    con.a.nrows(),
                    con.a.ncols()
                )));
            }
            check_hermitian(&con.a)?;
            if !con.rhs.is_finite() {
                return Err(Error::Dimension(format!("constraint {k} has non-finite rhs")));
            }
        }
        Ok(())
    }
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let asymmetry = numerics::max_asymmetry(m);
    if asymmetry > 1e-10 * numerics::max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    /// The constraints admit no PSD solution.
    Infeasible,
    /// The objective is unbounded below.
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: CMatrix,
    pub y: Vec<f64>,
    /// Dual slack `C − Σ yₖAₖ`.
    pub z: CMatrix,
    pub objective: f64,
    pub dual_objective: f64,
    /// `objective − dual_objective`.
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// `‖b − A(X) + s‖/(1 + ‖b‖)` with `s` the surplus of `≥` rows.
    pub primal_residual: f64,
    /// Negative part of `Z` and `y` on `≥` rows, relative to `1 + ‖C‖`.
    pub dual_residual: f64,
    /// `|Tr(XZ)| + Σ yₖsₖ`, relative to `1 + |objective|`.
    pub complementarity: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Converts any non-optimal status into the matching error.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::Infeasible => Err(Error::SdpInfeasible),
            SdpStatus::Unbounded => Err(Error::SdpUnbounded),
            SdpStatus::MaxIter => Err(Error::SdpMaxIter {
                iterations: self.iterations,
                residual: self.primal_residual.max(self.dual_residual).max(self.complementarity),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub stall_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-12,
            stall_tol: 1e-9,
        }
    }
}

fn embed(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn project(y: &DMatrix<f64>) -> CMatrix {
    let n = y.nrows() / 2;
    let x = CMatrix::from_fn(n, n, |i, j| {
        c(
            0.5 * (y[(i, j)] + y[(i + n, j + n)]),
            0.5 * (y[(i + n, j)] - y[(i, j + n)]),
        )
    });
    numerics::hermitian_part(&x)
}

fn trace_product(a: &CMatrix, x: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * x[(j, i)]).re;
        }
    }
    acc
}

pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_with(problem, &SdpSettings::default())
}

/// Runs the interior-point method. Non-optimal outcomes are reported through
/// [`SdpSolution::status`]; only malformed problems return an error.
pub fn solve_with(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.validate()?;
    let n = problem.n();
    let m = problem.constraints.len();
    let ge_rows: Vec<usize> = (0..m)
        .filter(|&k| problem.constraints[k].sense == Sense::AtLeast)
        .collect();

    // Embedded data with unit-norm rows, unit-norm objective and unit-size rhs.
    let mut a = Vec::with_capacity(m);
    let mut a_lp = Vec::with_capacity(m);
    let mut row_scale = Vec::with_capacity(m);
    for (k, con) in problem.constraints.iter().enumerate() {
        let ak = embed(&con.a) * 0.5;
        let mut lp = DVector::<f64>::zeros(ge_rows.len());
        if let Some(pos) = ge_rows.iter().position(|&r| r == k) {
            // Slack scaled with the row so rescaling a row is a no-op.
            lp[pos] = -ak.norm();
        }
        let norm = (ak.norm_squared() + lp.norm_squared()).sqrt().max(1e-300);
        a.push(ak / norm);
        a_lp.push(lp / norm);
        row_scale.push(norm);
    }
    let b_raw = DVector::from_fn(m, |k, _| problem.constraints[k].rhs / row_scale[k]);
    let b_scale = {
        let v = b_raw.amax();
        if v > 0.0 {
            v
        } else {
            1.0
        }
    };
    let c_emb = embed(&problem.c) * 0.5;
    let c_scale = {
        let v = c_emb.norm();
        if v > 0.0 {
            v
        } else {
            1.0
        }
    };
    let real = RealSdp {
        c: c_emb / c_scale,
        c_lp: DVector::zeros(ge_rows.len()),
        a,
        a_lp,
        b: b_raw / b_scale,
    };
    let ipm_settings = IpmSettings {
        max_iter: settings.max_iter,
        tol: settings.tol,
        stall_tol: settings.stall_tol,
        infeas_tol: 1e-8,
    };
    let sol = real.solve(&ipm_settings);

    let x = project(&(sol.x * b_scale));
    let y: Vec<f64> = (0..m).map(|k| sol.y[k] * c_scale / row_scale[k]).collect();
    let mut z = problem.c.clone();
    for (k, con) in problem.constraints.iter().enumerate() {
        z -= &con.a * c(y[k], 0.0);
    }
    let z = numerics::hermitian_part(&z);

    let objective = trace_product(&problem.c, &x);
    let b: Vec<f64> = problem.constraints.iter().map(|con| con.rhs).collect();
    let dual_objective: f64 = y.iter().zip(&b).map(|(y, b)| y * b).sum();

    let mut rp = 0.0;
    let mut surplus_dual = 0.0;
    let mut dual_neg = 0.0_f64;
    for (k, con) in problem.constraints.iter().enumerate() {
        let ax = trace_product(&con.a, &x);
        let r = match con.sense {
            Sense::Equal => ax - con.rhs,
            Sense::AtLeast => {
                surplus_dual += y[k] * (ax - con.rhs).max(0.0);
                dual_neg = dual_neg.max(-y[k]);
                (con.rhs - ax).max(0.0)
            }
        };
        rp += r * r;
    }
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = problem.c.norm();
    let z_min = numerics::hermitian_eigen(&z).0.iter().cloned().fold(f64::INFINITY, f64::min);
    let dual_residual = dual_neg.max(-z_min).max(0.0) / (1.0 + c_norm);
    let complementarity = (trace_product(&x, &z).abs() + surplus_dual.abs()) / (1.0 + objective.abs());

    let status = match sol.status {
        RealStatus::Optimal => SdpStatus::Optimal,
        RealStatus::PrimalInfeasible => SdpStatus::Infeasible,
        RealStatus::DualInfeasible => SdpStatus::Unbounded,
        RealStatus::MaxIter => SdpStatus::MaxIter,
    };
    log::trace!("sdp n={n} m={m} status={status:?} iterations={}", sol.iterations);
    Ok(SdpSolution {
        x,
        y,
        z,
        objective,
        dual_objective,
        gap: objective - dual_objective,
        status,
        iterations: sol.iterations,
        primal_residual: rp.sqrt() / (1.0 + b_norm),
        dual_residual,
        complementarity,
    })
}

/// Solves and maps non-optimal outcomes to errors.
pub fn solve_optimal(problem: &SdpProblem) -> Result<SdpSolution> {
    solve(problem)?.into_optimal()
}

/// Best rank-one approximation `vvᴴ` of a Hermitian PSD matrix and the
/// relative residual `‖X − vvᴴ‖_F/‖X‖_F`.
pub fn rank_one_extract(x: &CMatrix) -> (CVector, f64) {
    let n = x.nrows();
    if n == 0 {
        return (CVector::zeros(0), 0.0);
    }
    let (vals, vecs) = numerics::hermitian_eigen(x);
    let top = vals[n - 1].max(0.0);
    let v = vecs.column(n - 1).into_owned() * c(top.sqrt(), 0.0);
    let norm = x.norm();
    let residual = if norm > 0.0 {
        (x - &v * v.adjoint()).norm() / norm
    } else {
        0.0
    };
    (v, residual)
}

/// `Eᵢ`: the selector of diagonal entry `i`.
pub fn diagonal_selector(n: usize, i: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(i, i)] = c(1.0, 0.0);
    e
}
