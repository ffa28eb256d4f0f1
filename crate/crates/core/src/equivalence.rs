//! Maps between the order-n relaxation and the bordered order-(2n+1)
//! relaxation, the projection onto the basic relaxation, and structural
//! checks on their feasible points.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BisectionInstance;
use crate::model::{build_basic, build_new, build_wz, ConicProblem};
use crate::solver::min_eigenvalue;

/// Largest residual per constraint family plus the smallest eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub families: BTreeMap<String, f64>,
    pub lambda_min: f64,
    pub tol: f64,
    pub pass: bool,
}

impl FeasibilityReport {
    fn finish(families: BTreeMap<String, f64>, lambda_min: f64, tol: f64) -> Self {
        let pass = families.values().all(|&r| r <= tol) && lambda_min >= -tol;
        Self { families, lambda_min, tol, pass }
    }

    pub fn max_residual(&self) -> f64 {
        self.families.values().copied().fold(0.0, f64::max)
    }
}

fn family(label: &str) -> &str {
    label.split('(').next().unwrap_or(label)
}

/// Residuals of `m` against every constraint of `p`, grouped by label family.
pub fn feasibility_report(p: &ConicProblem, m: &DMatrix<f64>, tol: f64) -> Result<FeasibilityReport> {
    let order = p.block_order();
    if m.nrows() != order || m.ncols() != order {
        return Err(Error::OutOfRange(format!("expected a matrix of order {order}, got {}x{}", m.nrows(), m.ncols())));
    }
    let mut families: BTreeMap<String, f64> = BTreeMap::new();
    let mut record = |label: &str, r: f64| {
        let e = families.entry(family(label).to_string()).or_insert(0.0);
        *e = e.max(r);
    };
    for c in p.equalities() {
        record(&c.label, (c.coef.eval(m) - c.rhs).abs());
    }
    for c in p.inequalities() {
        record(&c.label, (c.coef.eval(m) - c.rhs).max(0.0));
    }
    Ok(FeasibilityReport::finish(families, min_eigenvalue(m)?, tol))
}

fn require(p: &ConicProblem, m: &DMatrix<f64>, tol: f64, what: &str) -> Result<()> {
    let rep = feasibility_report(p, m, tol)?;
    if rep.pass {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "{what}: max residual {:.3e}, lambda_min {:.3e}, tolerance {tol:.1e}",
            rep.max_residual(),
            rep.lambda_min
        )))
    }
}

/// Bordered matrix with `Y11 = X`, `Y22 = J + X - x e^T - e x^T`,
/// `Y12 = x e^T - X` and border `(x; e - x)`.
///
/// `x` is read as the diagonal of `X`. Fails unless `X` is feasible for the
/// order-n relaxation (equalities and PSD) within `tol`.
pub fn lift_new_to_wz(inst: &BisectionInstance, x: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    require(&build_new(inst, false), x, tol, "X is not feasible for the order-n relaxation")?;
    let n = inst.n();
    let d = x.diagonal();
    let mut y = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    y[(0, 0)] = 1.0;
    for i in 0..n {
        y[(0, 1 + i)] = d[i];
        y[(1 + i, 0)] = d[i];
        y[(0, 1 + n + i)] = 1.0 - d[i];
        y[(1 + n + i, 0)] = 1.0 - d[i];
        for j in 0..n {
            let xij = x[(i, j)];
            y[(1 + i, 1 + j)] = xij;
            y[(1 + n + i, 1 + n + j)] = 1.0 + xij - d[i] - d[j];
            // Y12[i][j] = x_i - X_ij, Y21 = Y12^T
            y[(1 + i, 1 + n + j)] = d[i] - xij;
            y[(1 + n + j, 1 + i)] = d[i] - xij;
        }
    }
    Ok(y)
}

fn blocks(y: &DMatrix<f64>) -> Result<usize> {
    let order = y.nrows();
    if order != y.ncols() || order < 5 || order % 2 == 0 {
        return Err(Error::OutOfRange(format!("expected a bordered matrix of order 2n+1, got {}x{}", y.nrows(), y.ncols())));
    }
    Ok((order - 1) / 2)
}

/// `X = Y11`. Fails unless `Y` is feasible for the bordered relaxation.
pub fn project_wz_to_new(inst: &BisectionInstance, y: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    require(&build_wz(inst), y, tol, "Y is not feasible for the bordered relaxation")?;
    let n = blocks(y)?;
    Ok(y.view((1, 1), (n, n)).into_owned())
}

/// `X = Y11 + Y22`, which has unit diagonal and `tr(JX) = m1^2 + m2^2`.
/// The basic relaxation's variable is `2X - J`, see [`basic_variable`].
pub fn project_wz_to_basic(inst: &BisectionInstance, y: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    require(&build_wz(inst), y, tol, "Y is not feasible for the bordered relaxation")?;
    let n = blocks(y)?;
    Ok(y.view((1, 1), (n, n)) + y.view((1 + n, 1 + n), (n, n)))
}

/// `2X - J`.
pub fn basic_variable(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.map(|v| 2.0 * v - 1.0)
}

/// Checks that `basic_variable(x)` is feasible for the basic relaxation.
pub fn basic_report(inst: &BisectionInstance, x: &DMatrix<f64>, tol: f64) -> Result<FeasibilityReport> {
    feasibility_report(&build_basic(inst), &basic_variable(x), tol)
}

/// Residuals of the identities `Y11 + Y12 = y1 e^T`, `Y21 + Y22 = y2 e^T`,
/// `y1 + y2 = e` and `Y_ii e = m_i y_i` for a bordered matrix.
pub fn check_property8(inst: &BisectionInstance, y: &DMatrix<f64>, tol: f64) -> Result<FeasibilityReport> {
    let n = blocks(y)?;
    if n != inst.n() {
        return Err(Error::OutOfRange(format!("bordered matrix has n = {n}, instance has {}", inst.n())));
    }
    let m = [inst.m1() as f64, inst.m2() as f64];
    let border = |b: usize, i: usize| y[(0, 1 + b * n + i)];
    let block = |b: usize, c: usize, i: usize, j: usize| y[(1 + b * n + i, 1 + c * n + j)];
    let mut families = BTreeMap::new();
    let mut rows = [0.0f64; 2];
    let mut sums = [0.0f64; 2];
    let mut parts = 0.0f64;
    for i in 0..n {
        parts = parts.max((border(0, i) + border(1, i) - 1.0).abs());
        for b in 0..2 {
            let mut row_own = 0.0;
            for j in 0..n {
                let r = block(b, 0, i, j) + block(b, 1, i, j) - border(b, i);
                rows[b] = rows[b].max(r.abs());
                row_own += block(b, b, i, j);
            }
            sums[b] = sums[b].max((row_own - m[b] * border(b, i)).abs());
        }
    }
    families.insert("y11+y12".to_string(), rows[0]);
    families.insert("y21+y22".to_string(), rows[1]);
    families.insert("y1+y2".to_string(), parts);
    families.insert("y11-rows".to_string(), sums[0]);
    families.insert("y22-rows".to_string(), sums[1]);
    Ok(FeasibilityReport::finish(families, min_eigenvalue(y)?, tol))
}

/// Both sides of the bordering equivalence for a matrix with
/// `X e = c diag(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderingCheck {
    /// Multiplier `c` fitted from `X e` and `diag(X)`.
    pub c: f64,
    /// `[[1, x^T], [x, X]]` is PSD within tolerance.
    pub bordered_psd: bool,
    /// `X` is PSD and `tr(JX) >= (tr X)^2`, both within tolerance.
    pub psd_and_trace: bool,
}

impl BorderingCheck {
    pub fn agree(&self) -> bool {
        self.bordered_psd == self.psd_and_trace
    }
}

/// Evaluates both sides; fails when `X e` is not a multiple of `diag(X)`.
pub fn check_prop2(x: &DMatrix<f64>, tol: f64) -> Result<BorderingCheck> {
    let n = x.nrows();
    if n == 0 || x.ncols() != n {
        return Err(Error::OutOfRange("expected a non-empty square matrix".into()));
    }
    let d: DVector<f64> = x.diagonal();
    let row: DVector<f64> = x.column_sum();
    let dd = d.dot(&d);
    if dd <= 0.0 {
        return Err(Error::Infeasible("diagonal is zero".into()));
    }
    let c = row.dot(&d) / dd;
    let miss = (&row - &d * c).amax();
    if miss > tol * (1.0 + row.amax()) {
        return Err(Error::Infeasible(format!("X e is not a multiple of diag(X) (residual {miss:.3e})")));
    }
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b[(0, 0)] = 1.0;
    b.view_mut((1, 1), (n, n)).copy_from(x);
    for i in 0..n {
        b[(0, 1 + i)] = d[i];
        b[(1 + i, 0)] = d[i];
    }
    let bordered_psd = min_eigenvalue(&b)? >= -tol;
    let tr = x.trace();
    let psd_and_trace = min_eigenvalue(x)? >= -tol && x.sum() >= tr * tr - tol;
    Ok(BorderingCheck { c, bordered_psd, psd_and_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, Assignment, Graph};
    use crate::model::{integer_point, strictly_feasible_point, RelaxationKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(n: usize, m1: usize) -> BisectionInstance {
        let g = Graph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        BisectionInstance::new(g, m1, n - m1).unwrap()
    }

    #[test]
    fn lift_of_integer_point_is_rank_one() {
        let inst = instance(6, 4);
        let a = Assignment::from_first_part(6, &[0, 2, 3, 5]).unwrap();
        let x = integer_point(RelaxationKind::New, &a);
        let y = lift_new_to_wz(&inst, &x, 1e-12).unwrap();
        assert_eq!(y, integer_point(RelaxationKind::Wz, &a));
        assert_eq!(project_wz_to_new(&inst, &y, 1e-12).unwrap(), x);
        let rep = check_property8(&inst, &y, 1e-12).unwrap();
        assert_eq!(rep.max_residual(), 0.0);
        let basic = project_wz_to_basic(&inst, &y, 1e-12).unwrap();
        assert!(basic.diagonal().iter().all(|&v| v == 1.0));
        assert_eq!(basic_variable(&basic), integer_point(RelaxationKind::Basic, &a));
    }

    #[test]
    fn lift_of_interior_point() {
        let inst = instance(4, 3);
        let x = strictly_feasible_point(&inst);
        let y = lift_new_to_wz(&inst, &x, 1e-12).unwrap();
        let y22 = y.view((5, 5), (4, 4)).sum();
        assert!((y22 - 1.0).abs() < 1e-12);
        assert!(feasibility_report(&build_wz(&inst), &y, 1e-12).unwrap().pass);
        assert!(check_property8(&inst, &y, 1e-12).unwrap().pass);
        assert!(basic_report(&inst, &project_wz_to_basic(&inst, &y, 1e-12).unwrap(), 1e-12).unwrap().pass);

        let l = laplacian(inst.graph());
        let lhs = (&l * &x).trace();
        let rhs = 0.5 * (&l * (y.view((1, 1), (4, 4)) + y.view((5, 5), (4, 4)))).trace();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn lifted_block_difference_is_psd() {
        let inst = instance(8, 5);
        let x = strictly_feasible_point(&inst);
        let d = x.diagonal();
        let s = &x - &d * d.transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let z1 = DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0));
            let z2 = DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0));
            let w = &z1 - &z2;
            assert!(w.dot(&(&s * &w)) >= -1e-12);
        }
    }

    #[test]
    fn infeasible_inputs_are_rejected() {
        let inst = instance(5, 3);
        let bad = DMatrix::identity(5, 5);
        assert!(matches!(lift_new_to_wz(&inst, &bad, 1e-9), Err(Error::Infeasible(_))));
        assert!(matches!(project_wz_to_new(&inst, &DMatrix::identity(11, 11), 1e-9), Err(Error::Infeasible(_))));
        assert!(project_wz_to_basic(&inst, &DMatrix::identity(5, 5), 1e-9).is_err());
    }

    #[test]
    fn bordering_equivalence() {
        let inst = instance(7, 4);
        let hat = check_prop2(&strictly_feasible_point(&inst), 1e-12).unwrap();
        assert!(hat.bordered_psd && hat.psd_and_trace);
        assert!((hat.c - 4.0).abs() < 1e-12);

        let a = Assignment::from_first_part(7, &[1, 2, 4, 6]).unwrap();
        let z = check_prop2(&integer_point(RelaxationKind::New, &a), 1e-12).unwrap();
        assert!(z.bordered_psd && z.psd_and_trace);

        // scaling X up keeps X e = c diag(X) and X PSD but breaks the trace condition
        let big = strictly_feasible_point(&inst) * 3.0;
        let r = check_prop2(&big, 1e-9).unwrap();
        assert!(!r.bordered_psd && !r.psd_and_trace);
        assert!(r.agree());

        assert!(check_prop2(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]), 1e-9).is_ok());
        assert!(check_prop2(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 3.0]), 1e-9).is_err());
    }
}
