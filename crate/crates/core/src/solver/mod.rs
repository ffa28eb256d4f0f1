//! Interior-point solver for [`ConicProblem`] and safe dual bounds.

mod ipm;
mod safe;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ConicProblem;

pub use safe::{safe_lower_bound, SafeBound};

/// Solver knobs. Tolerances are relative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_gap: f64,
    pub max_iters: usize,
    /// Largest block order accepted.
    pub max_block_order: usize,
    /// Retry with a shifted cone `M >= -eps I` when the plain solve stalls.
    pub regularize_on_stall: bool,
    pub verbosity: u8,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            tol_gap: 1e-7,
            max_iters: 500,
            max_block_order: 300,
            regularize_on_stall: true,
            verbosity: 0,
        }
    }
}

impl SolverConfig {
    /// All three tolerances set to `tol`.
    pub fn with_tolerance(tol: f64) -> Self {
        Self { tol_primal: tol, tol_dual: tol, tol_gap: tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("tol_primal", self.tol_primal), ("tol_dual", self.tol_dual), ("tol_gap", self.tol_gap)] {
            if !(t > 0.0 && t <= 1e-2) {
                return Err(Error::Config(format!("{name} = {t} outside (0, 1e-2]")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    NumericalTrouble,
    /// Equalities are inconsistent; detected before iterating.
    Infeasible,
}

/// Relative residuals of the returned iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Primal matrix, multipliers and diagnostics of one solve.
///
/// Dual sign convention: `Z = C - sum y_i A_i + sum u_j G_j` with `u >= 0`
/// (any sign on rows marked tight), dual objective `b^T y - h^T u + c0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal: DMatrix<f64>,
    pub dual_eq: DVector<f64>,
    pub dual_ineq: DVector<f64>,
    pub objective_primal: f64,
    pub objective_dual: f64,
    pub residuals: SolveResiduals,
    pub iterations: usize,
    /// Cone shift used by the stall fallback, if any.
    pub regularization: Option<f64>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves `p` with a primal-dual path-following method (NT scaling,
/// Mehrotra predictor-corrector). A recorded face is used to shrink the
/// block first; the returned primal is lifted back to full order.
pub fn solve(p: &ConicProblem, cfg: &SolverConfig) -> Result<ConicSolution> {
    cfg.validate()?;
    if p.block_order() > cfg.max_block_order {
        return Err(Error::TooLarge { n: p.block_order(), limit: cfg.max_block_order });
    }
    let reduced = p.reduced();
    let mut sol = ipm::solve(&reduced, cfg, 0.0)?;
    if sol.status != SolveStatus::Optimal && sol.status != SolveStatus::Infeasible && cfg.regularize_on_stall {
        let retry = ipm::solve(&reduced, cfg, ipm::REGULARIZATION)?;
        if rank(&retry) < rank(&sol) {
            sol = retry;
        }
    }
    if let Some(face) = p.face() {
        sol.primal = face.lift(&sol.primal);
    }
    // tight inequalities were solved as trailing equalities: u = -y
    let n_eq = p.equalities().len();
    let mut tight_y = sol.dual_eq.rows(n_eq, sol.dual_eq.len() - n_eq).iter().copied().collect::<Vec<_>>().into_iter();
    let mut loose_u = sol.dual_ineq.iter().copied().collect::<Vec<_>>().into_iter();
    let dual_ineq = DVector::from_iterator(
        p.inequalities().len(),
        p.inequalities().iter().map(|c| {
            if p.is_tight(&c.label) {
                -tight_y.next().expect("one multiplier per tight row")
            } else {
                loose_u.next().expect("one multiplier per inequality")
            }
        }),
    );
    sol.dual_eq = sol.dual_eq.rows(0, n_eq).into_owned();
    sol.dual_ineq = dual_ineq;
    sol.objective_primal = p.objective_value(&sol.primal);
    sol.objective_dual = p.equalities().iter().zip(sol.dual_eq.iter()).map(|(c, y)| c.rhs * y).sum::<f64>()
        - p.inequalities().iter().zip(sol.dual_ineq.iter()).map(|(c, u)| c.rhs * u).sum::<f64>()
        + p.offset();
    Ok(sol)
}

fn rank(s: &ConicSolution) -> (u8, u64) {
    let quality = s.residuals.primal.max(s.residuals.dual).max(s.residuals.gap);
    let class = match s.status {
        SolveStatus::Optimal => 0,
        SolveStatus::MaxIters => 1,
        SolveStatus::NumericalTrouble => 2,
        SolveStatus::Infeasible => 3,
    };
    (class, quality.to_bits())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::MalformedProblem("matrix is not square".into()));
    }
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let sym = (m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}
