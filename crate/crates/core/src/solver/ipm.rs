//! Infeasible primal-dual interior-point method for one PSD block plus
//! scalar inequalities.
//!
//! The Newton system is reduced to the primal entry space: unknowns are the
//! `N = n(n+1)/2` upper-triangle entries of `M` and the equality
//! multipliers. With NT scaling `W` the reduced matrix is
//! `H = W^-1 (.) W^-1 + G^T diag(u/s) G`, which stays `N x N` however many
//! inequalities are present.

use std::collections::HashMap;

use faer::linalg::solvers::Llt;
use faer::linalg::solvers::Solve;
use faer::{MatRef, Side};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ConicSolution, SolveResiduals, SolveStatus, SolverConfig};
use crate::error::Result;
use crate::model::ConicProblem;

pub(super) const REGULARIZATION: f64 = 1e-9;

const DEPENDENCY_TOL: f64 = 1e-9;
const STEP_FLOOR: f64 = 1e-9;
/// `N^2 p` below which the scaled Newton system is always used.
const SCALED_ALWAYS: f64 = 2e9;
/// `N^2 p` below which it is used when the entry-space factor breaks down.
const SCALED_FALLBACK: f64 = 4e10;
/// Inequalities with `u/s` above this go into the scaled system's
/// constraint block.
const SPLIT_WEIGHT: f64 = 1.0;

/// Compressed sparse rows over entry indices.
#[derive(Debug, Default)]
struct SparseRows {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl SparseRows {
    fn len(&self) -> usize {
        self.ptr.len().saturating_sub(1)
    }

    fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.ptr[j]..self.ptr[j + 1];
        self.idx[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |j, _| self.row(j).map(|(k, v)| v * x[k]).sum())
    }

    fn mul_t_add(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        for j in 0..self.len() {
            let wj = w[j];
            if wj != 0.0 {
                for (k, v) in self.row(j) {
                    out[k] += v * wj;
                }
            }
        }
    }
}

/// Upper-triangle entry indexing, column-major.
struct Entries {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl Entries {
    fn new(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for c in 0..n {
            for r in 0..=c {
                pairs.push((r, c));
            }
        }
        Self { n, pairs }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn index(r: usize, c: usize) -> usize {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        c * (c + 1) / 2 + r
    }

    /// Upper-triangle entries of a symmetric matrix.
    fn vec_of(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.pairs.iter().map(|&(r, c)| 0.5 * (m[(r, c)] + m[(c, r)])))
    }

    fn mat_of_entries(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (k, &(r, c)) in self.pairs.iter().enumerate() {
            m[(r, c)] = x[k];
            m[(c, r)] = x[k];
        }
        m
    }

    /// Symmetric matrix of a functional: diag `v`, off-diagonal `v/2`.
    fn mat_of_functional(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (k, &(r, c)) in self.pairs.iter().enumerate() {
            if r == c {
                m[(r, r)] = v[k];
            } else {
                m[(r, c)] = 0.5 * v[k];
                m[(c, r)] = 0.5 * v[k];
            }
        }
        m
    }

    /// Orthonormal vectorization: off-diagonal entries scaled by sqrt 2.
    fn svec(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let s2 = std::f64::consts::SQRT_2;
        DVector::from_iterator(
            self.len(),
            self.pairs.iter().map(|&(r, c)| if r == c { m[(r, r)] } else { s2 * 0.5 * (m[(r, c)] + m[(c, r)]) }),
        )
    }

    fn smat(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = DMatrix::zeros(self.n, self.n);
        for (k, &(r, c)) in self.pairs.iter().enumerate() {
            if r == c {
                m[(r, r)] = v[k];
            } else {
                m[(r, c)] = h * v[k];
                m[(c, r)] = h * v[k];
            }
        }
        m
    }

    /// `<F_rc, Q>`: `Q_rr` on the diagonal, `Q_rc + Q_cr` off it.
    fn functional_of(&self, q: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.pairs.iter().map(|&(r, c)| if r == c { q[(r, r)] } else { q[(r, c)] + q[(c, r)] }),
        )
    }
}

/// Problem data after presolve and scaling.
struct Data {
    ent: Entries,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: SparseRows,
    h: DVector<f64>,
    /// Original index and scale of each kept equality.
    kept: Vec<(usize, f64)>,
    /// Original index and scale of each kept inequality.
    g_kept: Vec<(usize, f64)>,
    obj_scale: f64,
}

enum Presolve {
    Ready(Data),
    Inconsistent(String),
}

fn functional_trace(entries: &[(usize, usize, f64)]) -> f64 {
    entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()
}

fn presolve(p: &ConicProblem, shift: f64) -> Presolve {
    let n = p.block_order();
    let ent = Entries::new(n);
    let nvar = ent.len();

    let mut c: DVector<f64> = DVector::zeros(nvar);
    for &(r, col, v) in p.objective().entries() {
        c[Entries::index(r, col)] += v;
    }
    let obj_scale = c.norm().max(1.0);
    c /= obj_scale;

    // Equalities: drop exact dependencies, rejecting inconsistent ones.
    let mut basis: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs = Vec::new();
    let mut kept = Vec::new();
    for (i, con) in p.equalities().iter().enumerate() {
        let mut a: DVector<f64> = DVector::zeros(nvar);
        for &(r, col, v) in con.coef.entries() {
            a[Entries::index(r, col)] += v;
        }
        let bi = con.rhs + shift * functional_trace(con.coef.entries());
        let norm = a.norm();
        if norm == 0.0 {
            if bi.abs() > 1e-12 {
                return Presolve::Inconsistent(format!("equality `{}` reads 0 = {bi}", con.label));
            }
            continue;
        }
        let (a, bi) = (a / norm, bi / norm);
        let mut res = a.clone();
        let mut bres = bi;
        for _ in 0..2 {
            for (q, beta) in &basis {
                let t = q.dot(&res);
                res.axpy(-t, q, 1.0);
                bres -= t * beta;
            }
        }
        let rn = res.norm();
        if rn < DEPENDENCY_TOL {
            if bres.abs() > 1e-8 * (1.0 + bi.abs()) {
                return Presolve::Inconsistent(format!(
                    "equality `{}` contradicts earlier equalities (mismatch {bres:.3e})",
                    con.label
                ));
            }
            continue;
        }
        basis.push((res / rn, bres / rn));
        rows.push(a);
        rhs.push(bi);
        kept.push((i, norm));
    }
    let m = rows.len();
    let mut a = DMatrix::zeros(m, nvar);
    for (i, r) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&r.transpose());
    }

    // Inequalities: drop rows that are constant on the equality hull, then
    // keep only the tightest of rows that agree there up to scaling.
    let probes = hash_probes(nvar, &basis);
    let mut cand: Vec<Candidate> = Vec::new();
    let mut buckets: HashMap<(bool, i64, i64), Vec<usize>> = HashMap::new();
    for (j, con) in p.inequalities().iter().enumerate() {
        let mut merged: Vec<(usize, f64)> =
            con.coef.entries().iter().map(|&(r, col, v)| (Entries::index(r, col), v)).collect();
        merged.sort_by_key(|e| e.0);
        merged.dedup_by(|later, first| {
            if later.0 == first.0 {
                first.1 += later.1;
                true
            } else {
                false
            }
        });
        let norm = merged.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for e in &mut merged {
            e.1 /= norm;
        }
        let hj = (con.rhs + shift * functional_trace(con.coef.entries())) / norm;
        let t: Vec<f64> = basis.iter().map(|(q, _)| merged.iter().map(|&(k, v)| q[k] * v).sum()).collect();
        let nu2 = 1.0 - t.iter().map(|x| x * x).sum::<f64>();
        if nu2 <= 1e-6 {
            // A row in the span of the equalities is constant on their
            // affine hull: either always satisfied (drop it, u = 0) or never.
            if let Some(value) = constant_on_hull(&merged, &basis) {
                if value > hj + 1e-8 * (1.0 + hj.abs()) {
                    return Presolve::Inconsistent(format!(
                        "inequality `{}` is violated by {:.3e} on the equality constraints",
                        con.label,
                        value - hj
                    ));
                }
                continue;
            }
        }
        let nu = nu2.max(0.0).sqrt();
        let eta = (hj - t.iter().zip(&basis).map(|(x, (_, beta))| x * beta).sum::<f64>()) / nu;
        let id = cand.len();
        cand.push(Candidate { orig: j, norm, row: merged, h: hj, t, nu, eta, keep: true });
        if nu2 < 1e-4 {
            continue;
        }
        let pr: Vec<f64> = probes.iter().map(|pb| pb.project(&cand[id])).collect();
        let key = (pr[0] > 0.0, (pr[0].abs() * 1e6).round() as i64, (pr[1] * pr[0].signum() * 1e6).round() as i64);
        let reps = buckets.entry(key).or_default();
        match reps.iter_mut().find(|r| same_direction(&cand[**r], &cand[id])) {
            Some(r) => {
                if cand[id].eta < cand[*r].eta - 1e-12 * (1.0 + cand[*r].eta.abs()) {
                    cand[*r].keep = false;
                    *r = id;
                } else {
                    cand[id].keep = false;
                }
            }
            None => reps.push(id),
        }
    }
    let mut g = SparseRows { ptr: vec![0], ..Default::default() };
    let mut h = Vec::with_capacity(cand.len());
    let mut g_kept = Vec::with_capacity(cand.len());
    for c in cand.into_iter().filter(|c| c.keep) {
        for (k, v) in c.row {
            g.idx.push(k);
            g.val.push(v);
        }
        g.ptr.push(g.idx.len());
        h.push(c.h);
        g_kept.push((c.orig, c.norm));
    }

    Presolve::Ready(Data {
        ent,
        c,
        a,
        b: DVector::from_vec(rhs),
        g,
        h: DVector::from_vec(h),
        kept,
        g_kept,
        obj_scale,
    })
}

/// A normalized inequality row with its coordinates `t` in the orthonormal
/// equality basis. Off the equality span the row reads `d.x <= eta` for the
/// unit direction `d = (row - Q t) / nu`.
struct Candidate {
    orig: usize,
    norm: f64,
    row: Vec<(usize, f64)>,
    h: f64,
    t: Vec<f64>,
    nu: f64,
    eta: f64,
    keep: bool,
}

/// Fixed pseudo-random direction, pre-projected on the equality basis, used
/// to bucket candidate rows by their direction off the equality span.
struct Probe {
    r: Vec<f64>,
    rq: Vec<f64>,
}

impl Probe {
    fn project(&self, c: &Candidate) -> f64 {
        let rg: f64 = c.row.iter().map(|&(k, v)| self.r[k] * v).sum();
        let rt: f64 = self.rq.iter().zip(&c.t).map(|(a, b)| a * b).sum();
        (rg - rt) / c.nu
    }
}

fn hash_probes(nvar: usize, basis: &[(DVector<f64>, f64)]) -> [Probe; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    [(); 2].map(|_| {
        let r: Vec<f64> = (0..nvar).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rq = basis.iter().map(|(q, _)| q.iter().zip(&r).map(|(a, b)| a * b).sum()).collect();
        Probe { r, rq }
    })
}

/// Whether two candidates have the same unit direction off the equality
/// span, via `|d_a - d_b|^2 = |g_a/nu_a - g_b/nu_b|^2 - |t_a/nu_a - t_b/nu_b|^2`.
fn same_direction(a: &Candidate, b: &Candidate) -> bool {
    let (sa, sb) = (1.0 / a.nu, 1.0 / b.nu);
    let (mut i, mut j, mut full) = (0, 0, 0.0);
    while i < a.row.len() || j < b.row.len() {
        let ka = a.row.get(i).map_or(usize::MAX, |e| e.0);
        let kb = b.row.get(j).map_or(usize::MAX, |e| e.0);
        let d = if ka == kb {
            i += 1;
            j += 1;
            a.row[i - 1].1 * sa - b.row[j - 1].1 * sb
        } else if ka < kb {
            i += 1;
            a.row[i - 1].1 * sa
        } else {
            j += 1;
            -b.row[j - 1].1 * sb
        };
        full += d * d;
    }
    let inside: f64 = a.t.iter().zip(&b.t).map(|(x, y)| (x * sa - y * sb).powi(2)).sum();
    full - inside <= 1e-10
}

/// Value of a normalized sparse row on the affine hull of the equalities,
/// if the row lies in their span. `basis` is orthonormal with matching
/// right-hand sides.
fn constant_on_hull(row: &[(usize, f64)], basis: &[(DVector<f64>, f64)]) -> Option<f64> {
    if row.iter().all(|e| e.1 == 0.0) {
        return Some(0.0);
    }
    // confirm with an explicit residual
    let mut res = DVector::zeros(basis.first()?.0.len());
    for &(k, v) in row {
        res[k] += v;
    }
    let mut value = 0.0;
    for _ in 0..2 {
        for (q, beta) in basis {
            let c = q.dot(&res);
            res.axpy(-c, q, 1.0);
            value += c * beta;
        }
    }
    (res.norm() < DEPENDENCY_TOL).then_some(value)
}

/// Cholesky factor with a growing diagonal shift on failure.
struct Factor(Llt<f64>, bool);

impl Factor {
    fn new(h: &DMatrix<f64>) -> Option<Self> {
        let n = h.nrows();
        let view = MatRef::from_column_major_slice(h.as_slice(), n, n);
        if let Ok(f) = view.llt(Side::Lower) {
            return Some(Self(f, false));
        }
        let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut m = view.to_owned();
        let mut added = 0.0;
        for attempt in 0..8 {
            let target = scale * 1e-14 * 100f64.powi(attempt);
            for i in 0..n {
                m[(i, i)] += target - added;
            }
            added = target;
            if let Ok(f) = m.llt(Side::Lower) {
                return Some(Self(f, true));
            }
        }
        None
    }

    fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let x = self.0.solve(MatRef::from_column_major_slice(b.as_slice(), b.nrows(), b.ncols()));
        DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| x[(i, j)])
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let x = self.0.solve(MatRef::from_column_major_slice(b.as_slice(), b.len(), 1));
        DVector::from_fn(b.len(), |i, _| x[(i, 0)])
    }
}

/// Factorized reduced KKT system `[H, -A^T; A, E]` with `E` diagonal
/// and nonnegative.
struct Kkt {
    a: DMatrix<f64>,
    e: DVector<f64>,
    h: DMatrix<f64>,
    hchol: Factor,
    hinv_at: DMatrix<f64>,
    schur: Option<Factor>,
}

impl Kkt {
    fn factor(h: DMatrix<f64>, a: DMatrix<f64>, e: DVector<f64>) -> Option<Self> {
        let hchol = Factor::new(&h)?;
        let hinv_at = hchol.solve_mat(&a.transpose());
        let schur = if a.nrows() > 0 {
            let s = &a * &hinv_at;
            let mut s = (&s + s.transpose()) * 0.5;
            for (i, ei) in e.iter().enumerate() {
                s[(i, i)] += ei;
            }
            Some(Factor::new(&s)?)
        } else {
            None
        };
        Some(Self { a, e, h, hchol, hinv_at, schur })
    }

    fn solve_once(&self, g: &DVector<f64>, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let hg = self.hchol.solve(g);
        match &self.schur {
            None => (hg, DVector::zeros(0)),
            Some(s) => {
                let dy = s.solve(&(r - &self.a * &hg));
                let dx = hg + &self.hinv_at * &dy;
                (dx, dy)
            }
        }
    }

    fn solve(&self, g: &DVector<f64>, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dx, mut dy) = self.solve_once(g, r);
        for _ in 0..2 {
            let r1 = g - &self.h * &dx + self.a.tr_mul(&dy);
            let r2 = r - &self.a * &dx - self.e.component_mul(&dy);
            let (cx, cy) = self.solve_once(&r1, &r2);
            dx += cx;
            dy += cy;
        }
        (dx, dy)
    }

    /// True when a factorization needed a diagonal shift.
    fn shifted(&self) -> bool {
        self.hchol.1 || self.schur.as_ref().is_some_and(|s| s.1)
    }
}

/// The same KKT system in NT-scaled coordinates `dM = R dT R^T`, where the
/// PSD part of `H` is the identity. Unknowns are `svec(dT)` (off-diagonal
/// entries times sqrt 2). Costs `O(N^2 p)` to form but stays accurate when
/// `W` is badly conditioned.
struct ScaledKkt<'e> {
    ent: &'e Entries,
    r: DMatrix<f64>,
    m: usize,
    inner: Kkt,
}

impl<'e> ScaledKkt<'e> {
    fn factor(ent: &'e Entries, r: &DMatrix<f64>, a: &DMatrix<f64>, g: &SparseRows, d: &DVector<f64>) -> Option<Self> {
        let nvar = ent.len();
        let rt = r.transpose();
        let mut at = DMatrix::zeros(a.nrows(), nvar);
        for i in 0..a.nrows() {
            let s = ent.mat_of_functional(&a.row(i).transpose());
            at.row_mut(i).copy_from(&ent.svec(&(&rt * s * r)).transpose());
        }
        // Rows with a large weight u/s would swamp the identity; they join
        // the constraint block instead, regularized by s/u.
        let (big, small): (Vec<usize>, Vec<usize>) = (0..g.len()).partition(|&j| d[j] > SPLIT_WEIGHT);
        let scaled_row = |j: usize| -> DVector<f64> {
            let mut t = DMatrix::<f64>::zeros(r.ncols(), r.ncols());
            for (k, v) in g.row(j) {
                let (p, q) = ent.pairs[k];
                let (rp, rq) = (r.row(p), r.row(q));
                if p == q {
                    t += rp.transpose() * rp * v;
                } else {
                    let x = rp.transpose() * rq * (0.5 * v);
                    t += &x + x.transpose();
                }
            }
            ent.svec(&t)
        };
        let mut gt = DMatrix::zeros(small.len(), nvar);
        for (i, &j) in small.iter().enumerate() {
            gt.row_mut(i).copy_from(&(scaled_row(j) * d[j].sqrt()).transpose());
        }
        let mut h = gt.tr_mul(&gt);
        for k in 0..nvar {
            h[(k, k)] += 1.0;
        }
        let m = a.nrows();
        let mut ab = DMatrix::zeros(m + big.len(), nvar);
        ab.rows_mut(0, m).copy_from(&at);
        let mut e = DVector::zeros(m + big.len());
        for (i, &j) in big.iter().enumerate() {
            ab.row_mut(m + i).copy_from(&scaled_row(j).transpose());
            e[m + i] = 1.0 / d[j];
        }
        let inner = Kkt::factor(h, ab, e)?;
        Some(Self { ent, r: r.clone(), m, inner })
    }

    fn solve(&self, gv: &DVector<f64>, rp: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let rhs = self.ent.svec(&(self.r.tr_mul(&self.ent.mat_of_functional(gv)) * &self.r));
        let mut rb = DVector::zeros(self.inner.a.nrows());
        rb.rows_mut(0, self.m).copy_from(rp);
        let (dt, dy) = self.inner.solve(&rhs, &rb);
        let dy = dy.rows(0, self.m).into_owned();
        let dm = &self.r * self.ent.smat(&dt) * self.r.transpose();
        (self.ent.vec_of(&dm), dy)
    }
}

enum Newton<'e> {
    Entry(Kkt),
    Scaled(ScaledKkt<'e>),
}

impl Newton<'_> {
    fn solve(&self, gv: &DVector<f64>, rp: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match self {
            Newton::Entry(k) => k.solve(gv, rp),
            Newton::Scaled(k) => k.solve(gv, rp),
        }
    }
}

struct Iterate {
    m: DMatrix<f64>,
    z: DMatrix<f64>,
    s: DVector<f64>,
    u: DVector<f64>,
    y: DVector<f64>,
}

struct Direction {
    dm: DMatrix<f64>,
    dz: DMatrix<f64>,
    ds: DVector<f64>,
    du: DVector<f64>,
    dy: DVector<f64>,
}

/// Largest step keeping `Lambda + alpha * D` PSD, `D` given in scaled form.
fn psd_step(lam_isqrt: &DVector<f64>, d_scaled: &DMatrix<f64>) -> f64 {
    let n = lam_isqrt.len();
    let p = DMatrix::from_fn(n, n, |i, j| {
        lam_isqrt[i] * lam_isqrt[j] * 0.5 * (d_scaled[(i, j)] + d_scaled[(j, i)])
    });
    let rho = SymmetricEigen::new(p).eigenvalues.min();
    if rho < 0.0 {
        -1.0 / rho
    } else {
        f64::INFINITY
    }
}

fn lp_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

fn hpsd(ent: &Entries, winv: &DMatrix<f64>) -> DMatrix<f64> {
    let nvar = ent.len();
    let mut h = DMatrix::zeros(nvar, nvar);
    for q in 0..nvar {
        let (k, l) = ent.pairs[q];
        let ckl = if k == l { 0.5 } else { 1.0 };
        let col = &mut h.as_mut_slice()[q * nvar..(q + 1) * nvar];
        for (p, &(i, j)) in ent.pairs[..=q].iter().enumerate() {
            let cij = if i == j { 0.5 } else { 1.0 };
            col[p] = 2.0 * ckl * cij * (winv[(k, i)] * winv[(l, j)] + winv[(k, j)] * winv[(l, i)]);
        }
    }
    for q in 0..nvar {
        for p in 0..q {
            h[(q, p)] = h[(p, q)];
        }
    }
    h
}

pub(super) fn solve(p: &ConicProblem, cfg: &SolverConfig, shift: f64) -> Result<ConicSolution> {
    let nb = p.block_order();
    let data = match presolve(p, shift) {
        Presolve::Ready(d) => d,
        Presolve::Inconsistent(msg) => {
            if cfg.verbosity > 0 {
                eprintln!("presolve: {msg}");
            }
            return Ok(ConicSolution {
                status: SolveStatus::Infeasible,
                primal: DMatrix::zeros(nb, nb),
                dual_eq: DVector::zeros(p.equalities().len()),
                dual_ineq: DVector::zeros(p.inequalities().len()),
                objective_primal: f64::NAN,
                objective_dual: f64::NAN,
                residuals: SolveResiduals { primal: f64::INFINITY, dual: f64::INFINITY, gap: f64::INFINITY },
                iterations: 0,
                regularization: (shift > 0.0).then_some(shift),
            });
        }
    };
    let Data { ent, c, a, b, g, h, .. } = &data;
    let m_eq = a.nrows();
    let p_in = g.len();
    let nu = (nb + p_in) as f64;

    let bnorm = (b.norm_squared() + h.norm_squared()).sqrt();
    let cmat = ent.mat_of_functional(c);
    let cnorm = cmat.norm();

    // Initial point in the spirit of SDPT3.
    let nbf = nb as f64;
    let mut xi = 10f64.max(nbf.sqrt());
    for i in 0..m_eq {
        let anorm = ent.mat_of_functional(&a.row(i).transpose()).norm();
        xi = xi.max(nbf * (1.0 + b[i].abs()) / (1.0 + anorm));
    }
    let eta = 10f64.max(nbf.sqrt()).max(cnorm).max(1.0);
    let s_init = 10f64.max(h.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    let mut it = Iterate {
        m: DMatrix::identity(nb, nb) * xi,
        z: DMatrix::identity(nb, nb) * eta,
        s: DVector::from_element(p_in, s_init),
        u: DVector::from_element(p_in, eta.min(10.0)),
        y: DVector::zeros(m_eq),
    };

    let status;
    let mut best: Option<(f64, Iterate, SolveResiduals)> = None;
    let mut iters = 0;
    let mut small_steps = 0;

    loop {
        let x = ent.vec_of(&it.m);
        let rp = b - a * &x;
        let rg = h - g.mul(&x) - &it.s;
        let mut dres = c - a.tr_mul(&it.y);
        g.mul_t_add(&it.u, &mut dres);
        let rd = ent.mat_of_functional(&dres) - &it.z;

        let pobj = c.dot(&x);
        let dobj = b.dot(&it.y) - h.dot(&it.u);
        let res = SolveResiduals {
            primal: (rp.norm_squared() + rg.norm_squared()).sqrt() / (1.0 + bnorm),
            dual: rd.norm() / (1.0 + cnorm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        };
        let score = res.primal.max(res.dual).max(res.gap);
        if cfg.verbosity > 1 {
            eprintln!(
                "ipm {iters:3} pobj {:+.9e} dobj {:+.9e} pinf {:.2e} dinf {:.2e} gap {:.2e}",
                pobj * data.obj_scale,
                dobj * data.obj_scale,
                res.primal,
                res.dual,
                res.gap
            );
        }
        if !score.is_finite() {
            status = SolveStatus::NumericalTrouble;
            break;
        }
        let improved = best.as_ref().map_or(true, |b| score < b.0);
        if improved {
            best = Some((
                score,
                Iterate { m: it.m.clone(), z: it.z.clone(), s: it.s.clone(), u: it.u.clone(), y: it.y.clone() },
                res,
            ));
        }
        if res.primal <= cfg.tol_primal && res.dual <= cfg.tol_dual && res.gap <= cfg.tol_gap {
            status = SolveStatus::Optimal;
            break;
        }
        if iters >= cfg.max_iters {
            status = SolveStatus::MaxIters;
            break;
        }
        iters += 1;

        let mu = (it.m.dot(&it.z) + it.s.dot(&it.u)) / nu;

        // NT scaling: R^-1 M R^-T = R^T Z R = Lambda.
        let (Some(l1), Some(l2)) = (Cholesky::new(it.m.clone()), Cholesky::new(it.z.clone())) else {
            status = SolveStatus::NumericalTrouble;
            break;
        };
        let l1 = l1.l();
        let l2 = l2.l();
        let svd = SVD::new(l2.tr_mul(&l1), true, true);
        let (Some(uu), Some(vt)) = (svd.u, svd.v_t) else {
            status = SolveStatus::NumericalTrouble;
            break;
        };
        let lam = svd.singular_values;
        if lam.iter().any(|&v| !(v > 0.0)) {
            status = SolveStatus::NumericalTrouble;
            break;
        }
        let lam_isqrt = lam.map(|v| 1.0 / v.sqrt());
        let r_mat = (l1 * vt.transpose()) * DMatrix::from_diagonal(&lam_isqrt);
        let r_inv = DMatrix::from_diagonal(&lam_isqrt) * uu.transpose() * l2.transpose();
        let winv = r_inv.tr_mul(&r_inv);

        let dlp = it.u.component_div(&it.s);
        let scaled_cost = (ent.len() as f64).powi(2) * p_in.max(1) as f64;
        let kkt = if scaled_cost <= SCALED_ALWAYS {
            ScaledKkt::factor(ent, &r_mat, a, g, &dlp).map(Newton::Scaled)
        } else {
            let mut hmat = hpsd(ent, &winv);
            for j in 0..p_in {
                let w = dlp[j];
                let r = g.ptr[j]..g.ptr[j + 1];
                for (&ka, &va) in g.idx[r.clone()].iter().zip(&g.val[r.clone()]) {
                    for (&kb, &vb) in g.idx[r.clone()].iter().zip(&g.val[r.clone()]) {
                        hmat[(ka, kb)] += w * va * vb;
                    }
                }
            }
            match Kkt::factor(hmat, a.clone(), DVector::zeros(a.nrows())) {
                Some(k) if k.shifted() && scaled_cost <= SCALED_FALLBACK => {
                    ScaledKkt::factor(ent, &r_mat, a, g, &dlp).map(Newton::Scaled).or(Some(Newton::Entry(k)))
                }
                k => k.map(Newton::Entry),
            }
        };
        let Some(kkt) = kkt else {
            status = SolveStatus::NumericalTrouble;
            break;
        };

        let direction = |t: &DMatrix<f64>, ks: &DVector<f64>| -> Direction {
            let q = r_inv.tr_mul(t) * &r_inv - &rd;
            let mut gv = ent.functional_of(&q);
            let corr = (ks - &rg).component_mul(&dlp);
            let mut tmp = DVector::zeros(gv.len());
            g.mul_t_add(&corr, &mut tmp);
            gv -= tmp;
            let (dx, dy) = kkt.solve(&gv, &rp);
            let dm = ent.mat_of_entries(&dx);
            let gdx = g.mul(&dx);
            let ds = &rg - &gdx;
            let du = (ks - &rg + &gdx).component_mul(&dlp);
            let mut dfun = -a.tr_mul(&dy);
            g.mul_t_add(&du, &mut dfun);
            let dz = &rd + ent.mat_of_functional(&dfun);
            Direction { dm, dz, ds, du, dy }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let dst = &r_inv * &d.dm * r_inv.transpose();
            let dzt = r_mat.tr_mul(&d.dz) * &r_mat;
            let ap = psd_step(&lam_isqrt, &dst).min(lp_step(&it.s, &d.ds));
            let ad = psd_step(&lam_isqrt, &dzt).min(lp_step(&it.u, &d.du));
            (ap, ad)
        };

        // Predictor.
        let t_aff = DMatrix::from_diagonal(&(-&lam));
        let ks_aff = -&it.s;
        let aff = direction(&t_aff, &ks_aff);
        let (ap_max, ad_max) = steps(&aff);
        let (ap, ad) = (ap_max.min(1.0), ad_max.min(1.0));
        let mu_aff = ((&it.m + &aff.dm * ap).dot(&(&it.z + &aff.dz * ad))
            + (&it.s + &aff.ds * ap).dot(&(&it.u + &aff.du * ad)))
            / nu;
        let sigma = (mu_aff.max(0.0) / mu).powi(3).min(1.0);

        // Corrector.
        let dst = &r_inv * &aff.dm * r_inv.transpose();
        let dzt = r_mat.tr_mul(&aff.dz) * &r_mat;
        let prod = (&dst * &dzt + &dzt * &dst) * 0.5;
        let t_cc = DMatrix::from_fn(nb, nb, |i, j| {
            let diag = if i == j { sigma * mu - lam[i] * lam[i] } else { 0.0 };
            2.0 * (diag - prod[(i, j)]) / (lam[i] + lam[j])
        });
        let ks_cc = DVector::from_fn(p_in, |j, _| {
            (sigma * mu - it.s[j] * it.u[j] - aff.ds[j] * aff.du[j]) / it.u[j]
        });
        let d = direction(&t_cc, &ks_cc);
        let (ap_max, ad_max) = steps(&d);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) {
            status = SolveStatus::NumericalTrouble;
            break;
        }

        it.m += &d.dm * ap;
        it.m = (&it.m + it.m.transpose()) * 0.5;
        it.s += &d.ds * ap;
        it.z += &d.dz * ad;
        it.z = (&it.z + it.z.transpose()) * 0.5;
        it.u += &d.du * ad;
        it.y += &d.dy * ad;

        if ap.max(ad) < STEP_FLOOR {
            small_steps += 1;
            if small_steps >= 3 {
                status = SolveStatus::NumericalTrouble;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    let (final_it, final_res) = match (status, best) {
        (SolveStatus::Optimal, _) | (_, None) => {
            let x = ent.vec_of(&it.m);
            let rp = b - a * &x;
            let rg = h - g.mul(&x) - &it.s;
            let mut dres = c - a.tr_mul(&it.y);
            g.mul_t_add(&it.u, &mut dres);
            let rd = ent.mat_of_functional(&dres) - &it.z;
            let pobj = c.dot(&x);
            let dobj = b.dot(&it.y) - h.dot(&it.u);
            let res = SolveResiduals {
                primal: (rp.norm_squared() + rg.norm_squared()).sqrt() / (1.0 + bnorm),
                dual: rd.norm() / (1.0 + cnorm),
                gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            };
            (it, res)
        }
        (_, Some((_, b_it, b_res))) => (b_it, b_res),
    };

    // Undo scaling.
    let mut dual_eq = DVector::zeros(p.equalities().len());
    for (k, &(orig, norm)) in data.kept.iter().enumerate() {
        dual_eq[orig] = final_it.y[k] * data.obj_scale / norm;
    }
    let mut dual_ineq = DVector::zeros(p.inequalities().len());
    for (k, &(orig, norm)) in data.g_kept.iter().enumerate() {
        dual_ineq[orig] = final_it.u[k].max(0.0) * data.obj_scale / norm;
    }
    let primal = if shift > 0.0 {
        &final_it.m - DMatrix::identity(nb, nb) * shift
    } else {
        final_it.m
    };
    let objective_primal = p.objective_value(&primal);
    let objective_dual = p.equalities().iter().zip(dual_eq.iter()).map(|(c, y)| c.rhs * y).sum::<f64>()
        - p.inequalities().iter().zip(dual_ineq.iter()).map(|(c, u)| c.rhs * u).sum::<f64>()
        + p.offset();

    Ok(ConicSolution {
        status,
        primal,
        dual_eq,
        dual_ineq,
        objective_primal,
        objective_dual,
        residuals: final_res,
        iterations: iters,
        regularization: (shift > 0.0).then_some(shift),
    })
}
