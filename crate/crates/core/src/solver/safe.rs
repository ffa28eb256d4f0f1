//! Rigorous lower bounds from approximate dual solutions.
//!
//! For any `y` and `u >= 0`, with `Z = C - sum y_i A_i + sum u_j G_j` and a
//! feasible `M` of known trace `t`,
//! `<C, M> >= b^T y - h^T u + t * lambda_min(Z)`. The correction is only
//! applied when `lambda_min(Z) < 0`. Inequalities marked tight hold with
//! equality on the feasible set, so their `u_j` may be negative. When the problem records a face
//! `M = V W V^T`, `lambda_min(V^T Z V)` takes the place of `lambda_min(Z)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{min_eigenvalue, ConicSolution};
use crate::error::{Error, Result};
use crate::model::ConicProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeBound {
    pub value: f64,
    pub dual_eq: DVector<f64>,
    pub dual_ineq: DVector<f64>,
    pub lambda_min: f64,
}

pub fn safe_lower_bound(p: &ConicProblem, sol: &ConicSolution) -> Result<SafeBound> {
    let t = p
        .fixed_trace()
        .ok_or_else(|| Error::UnsupportedProblem("no trace-fixing equality recorded".into()))?;
    if sol.dual_eq.len() != p.equalities().len() || sol.dual_ineq.len() != p.inequalities().len() {
        return Err(Error::MalformedProblem("multiplier count does not match the problem".into()));
    }
    let y = &sol.dual_eq;
    // rows that hold with equality on the feasible set keep their sign
    let u = DVector::from_iterator(
        sol.dual_ineq.len(),
        p.inequalities().iter().zip(sol.dual_ineq.iter()).map(|(c, &v)| if p.is_tight(&c.label) { v } else { v.max(0.0) }),
    );

    let n = p.block_order();
    let mut z = p.objective().to_matrix(n);
    let mut value = p.offset();
    for (con, &yi) in p.equalities().iter().zip(y.iter()) {
        con.coef.add_to_matrix(&mut z, -yi);
        value += con.rhs * yi;
    }
    for (con, &uj) in p.inequalities().iter().zip(u.iter()) {
        if uj != 0.0 {
            con.coef.add_to_matrix(&mut z, uj);
            value -= con.rhs * uj;
        }
    }
    // on a known face only V^T Z V matters: <Z, V W V^T> = <V^T Z V, W>
    let lambda_min = match p.face() {
        Some(face) => min_eigenvalue(&face.compress(&z))?,
        None => min_eigenvalue(&z)?,
    };
    value += t * lambda_min.min(0.0);
    Ok(SafeBound { value, dual_eq: y.clone(), dual_ineq: u, lambda_min })
}
