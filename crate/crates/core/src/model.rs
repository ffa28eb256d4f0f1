//! Conic standard form and the relaxation builders.
//!
//! Every relaxation is expressed over a single symmetric matrix variable `M`:
//!
//! ```text
//! minimize   <C, M> + c0
//! subject to <A_i, M>  = b_i
//!            <G_j, M> <= h_j
//!            M  PSD
//! ```
//!
//! Coefficient matrices are stored as [`SparseSym`] functionals over the
//! upper triangle of `M`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, Assignment, BisectionInstance};

/// A linear functional on symmetric matrices, `sum coef * M[r][c]` over
/// upper-triangle entries `r <= c`.
///
/// The equivalent symmetric coefficient matrix has `A[r][r] = coef` on the
/// diagonal and `A[r][c] = A[c][r] = coef / 2` off it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coef * M[r][c]`; the pair is normalized to `r <= c` and
    /// repeated entries are merged.
    pub fn add(&mut self, r: usize, c: usize, coef: f64) {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == r && e.1 == c) {
            e.2 += coef;
        } else {
            self.entries.push((r, c, coef));
        }
    }

    /// Builds from entries that are already normalized and distinct.
    pub fn from_entries(entries: Vec<(usize, usize, f64)>) -> Self {
        debug_assert!(entries.iter().all(|e| e.0 <= e.1));
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }

    /// `<A, M>`, with compensated summation so residuals of long rows stay
    /// at rounding level.
    pub fn eval(&self, m: &DMatrix<f64>) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &(r, c, v) in &self.entries {
            let x = v * m[(r, c)];
            let t = sum + x;
            comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        }
        sum + comp
    }

    /// The symmetric matrix `A` with `<A, M>` equal to this functional.
    pub fn to_matrix(&self, order: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(order, order);
        self.add_to_matrix(&mut a, 1.0);
        a
    }

    /// `target += scale * A`.
    pub fn add_to_matrix(&self, target: &mut DMatrix<f64>, scale: f64) {
        for &(r, c, v) in &self.entries {
            if r == c {
                target[(r, r)] += scale * v;
            } else {
                target[(r, c)] += 0.5 * scale * v;
                target[(c, r)] += 0.5 * scale * v;
            }
        }
    }

    /// Functional `<S, M>` for a dense symmetric `S`, dropping zeros.
    pub fn from_matrix(s: &DMatrix<f64>) -> Self {
        let n = s.nrows();
        let mut entries = Vec::new();
        for c in 0..n {
            for r in 0..=c {
                let v = if r == c { s[(r, r)] } else { s[(r, c)] + s[(c, r)] };
                if v != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }
}

/// A face of the PSD cone known to contain every feasible point:
/// `M = V W V^T` with `W` PSD and `V` an `order x dim` matrix with
/// orthonormal columns, stored by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    order: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl Face {
    pub fn new(order: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if cols.is_empty() || cols.len() > order {
            return Err(Error::MalformedProblem(format!("face dimension {} for order {order}", cols.len())));
        }
        if cols.iter().flatten().any(|&(r, v)| r >= order || !v.is_finite()) {
            return Err(Error::MalformedProblem("face basis indexes past the block order".into()));
        }
        let f = Self { order, cols };
        let v = f.basis();
        let gram = v.transpose() * &v;
        let err = (gram - DMatrix::<f64>::identity(f.dim(), f.dim())).amax();
        if err > 1e-12 {
            return Err(Error::MalformedProblem(format!("face basis is not orthonormal (error {err:.1e})")));
        }
        Ok(f)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.cols
    }

    /// Dense `V`.
    pub fn basis(&self) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(self.order, self.dim());
        for (k, col) in self.cols.iter().enumerate() {
            for &(r, x) in col {
                v[(r, k)] += x;
            }
        }
        v
    }

    fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.order];
        for (k, col) in self.cols.iter().enumerate() {
            for &(r, x) in col {
                rows[r].push((k, x));
            }
        }
        rows
    }

    /// The functional `W -> <A, V W V^T>`.
    pub fn reduce(&self, a: &SparseSym) -> SparseSym {
        self.reduce_with(&self.rows(), a)
    }

    fn reduce_with(&self, rows: &[Vec<(usize, f64)>], a: &SparseSym) -> SparseSym {
        let mut acc = std::collections::BTreeMap::<(usize, usize), f64>::new();
        let mut scale = 0.0f64;
        for &(r, c, v) in a.entries() {
            scale = scale.max(v.abs());
            for &(k, vk) in &rows[r] {
                for &(l, vl) in &rows[c] {
                    // W symmetric: fold (l, k) onto the upper triangle
                    let key = if k <= l { (k, l) } else { (l, k) };
                    *acc.entry(key).or_insert(0.0) += v * vk * vl;
                }
            }
        }
        let cut = 1e-14 * scale;
        SparseSym::from_entries(acc.into_iter().filter(|e| e.1.abs() > cut).map(|((k, l), v)| (k, l, v)).collect())
    }

    /// `V W V^T`.
    pub fn lift(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let v = self.basis();
        let m = &v * w * v.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// `V^T Z V`.
    pub fn compress(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let v = self.basis();
        let m = v.transpose() * z * &v;
        (&m + m.transpose()) * 0.5
    }
}

/// One labelled linear constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub coef: SparseSym,
    pub rhs: f64,
}

/// Which relaxation a [`ConicProblem`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationKind {
    /// Order-n relaxation over `2X - J`.
    Basic,
    /// Order-n relaxation with `Xe = m1 diag(X)` and the nonnegativity families.
    New,
    /// As `New` without the nonnegativity families.
    NewBare,
    /// Order-(2n+1) vector-lifting relaxation.
    Wz,
}

impl RelaxationKind {
    pub const ALL: [RelaxationKind; 4] = [Self::Basic, Self::New, Self::NewBare, Self::Wz];

    pub fn name(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::New => "new",
            Self::NewBare => "new-bare",
            Self::Wz => "wz",
        }
    }
}

impl fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelaxationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown relaxation `{s}`")))
    }
}

/// Single-block SDP in standard form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProblem {
    block_order: usize,
    kind: RelaxationKind,
    objective: SparseSym,
    offset: f64,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
    fixed_trace: Option<f64>,
    #[serde(default)]
    face: Option<Face>,
    #[serde(default)]
    tight: BTreeSet<String>,
    #[serde(skip)]
    labels: HashSet<String>,
}

/// Reserved label under which the fixed trace of `M` is serialized.
pub const TRACE_LABEL: &str = "@trace";

impl ConicProblem {
    pub fn new(block_order: usize, kind: RelaxationKind, objective: SparseSym, offset: f64) -> Result<Self> {
        if block_order == 0 {
            return Err(Error::MalformedProblem("block order must be positive".into()));
        }
        Self::check_coef(block_order, &objective, "objective")?;
        Ok(Self {
            block_order,
            kind,
            objective,
            offset,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            fixed_trace: None,
            face: None,
            tight: BTreeSet::new(),
            labels: HashSet::new(),
        })
    }

    fn check_coef(order: usize, coef: &SparseSym, label: &str) -> Result<()> {
        if coef.max_index().is_some_and(|m| m >= order) {
            return Err(Error::MalformedProblem(format!("`{label}` indexes past block order {order}")));
        }
        if coef.entries().iter().any(|e| !e.2.is_finite()) {
            return Err(Error::MalformedProblem(format!("`{label}` has a non-finite coefficient")));
        }
        Ok(())
    }

    fn claim_label(&mut self, label: &str) -> Result<bool> {
        if label == TRACE_LABEL || label == "objective" {
            return Err(Error::MalformedProblem(format!("label `{label}` is reserved")));
        }
        Ok(self.labels.insert(label.to_string()))
    }

    /// Adds an equality. Labels must be unique.
    pub fn add_equality(&mut self, label: impl Into<String>, coef: SparseSym, rhs: f64) -> Result<()> {
        let label = label.into();
        Self::check_coef(self.block_order, &coef, &label)?;
        if !self.claim_label(&label)? {
            return Err(Error::MalformedProblem(format!("duplicate label `{label}`")));
        }
        self.equalities.push(Constraint { label, coef, rhs });
        Ok(())
    }

    /// Adds `<G, M> <= h`. Returns false (and adds nothing) when the label
    /// is already present.
    pub fn add_inequality(&mut self, label: impl Into<String>, coef: SparseSym, rhs: f64) -> Result<bool> {
        let label = label.into();
        Self::check_coef(self.block_order, &coef, &label)?;
        if !self.claim_label(&label)? {
            return Ok(false);
        }
        self.inequalities.push(Constraint { label, coef, rhs });
        Ok(true)
    }

    /// Records that every feasible `M` has trace `t`.
    pub fn set_fixed_trace(&mut self, t: f64) {
        self.fixed_trace = Some(t);
    }

    /// Records a face containing every feasible `M`. The solver then works
    /// on the smaller block `W`.
    pub fn set_face(&mut self, face: Face) -> Result<()> {
        if face.order() != self.block_order {
            return Err(Error::MalformedProblem("face order differs from block order".into()));
        }
        self.face = Some(face);
        Ok(())
    }

    pub fn face(&self) -> Option<&Face> {
        self.face.as_ref()
    }

    /// Records that the inequality `label` holds with equality at every
    /// feasible point. The solver treats it as an equality and its
    /// multiplier may take either sign.
    pub fn mark_tight(&mut self, label: &str) -> Result<()> {
        if !self.inequalities.iter().any(|c| c.label == label) {
            return Err(Error::MalformedProblem(format!("no inequality labelled `{label}`")));
        }
        self.tight.insert(label.to_string());
        Ok(())
    }

    pub fn is_tight(&self, label: &str) -> bool {
        self.tight.contains(label)
    }

    /// What the solver actually sees: the problem over `W` when a face
    /// `M = V W V^T` is recorded (the fixed trace carries over since `V`
    /// has orthonormal columns), with tight inequalities appended to the
    /// equalities in their original order.
    pub fn reduced(&self) -> ConicProblem {
        let rows = self.face.as_ref().map(Face::rows);
        let red = |c: &Constraint| match (&self.face, &rows) {
            (Some(f), Some(r)) => Constraint { label: c.label.clone(), coef: f.reduce_with(r, &c.coef), rhs: c.rhs },
            _ => c.clone(),
        };
        let mut equalities: Vec<Constraint> = self.equalities.iter().map(red).collect();
        let mut inequalities = Vec::with_capacity(self.inequalities.len());
        for c in &self.inequalities {
            if self.tight.contains(&c.label) {
                equalities.push(red(c));
            } else {
                inequalities.push(red(c));
            }
        }
        ConicProblem {
            block_order: self.face.as_ref().map_or(self.block_order, Face::dim),
            kind: self.kind,
            objective: red(&Constraint { label: String::new(), coef: self.objective.clone(), rhs: 0.0 }).coef,
            offset: self.offset,
            equalities,
            inequalities,
            fixed_trace: self.fixed_trace,
            face: None,
            tight: BTreeSet::new(),
            labels: self.labels.clone(),
        }
    }

    pub fn block_order(&self) -> usize {
        self.block_order
    }

    pub fn kind(&self) -> RelaxationKind {
        self.kind
    }

    pub fn objective(&self) -> &SparseSym {
        &self.objective
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn fixed_trace(&self) -> Option<f64> {
        self.fixed_trace
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    /// Drops the equality with the given label, if present.
    pub fn remove_equality(&mut self, label: &str) -> bool {
        let before = self.equalities.len();
        self.equalities.retain(|c| c.label != label);
        self.labels.remove(label);
        self.equalities.len() != before
    }

    /// Objective value `<C, M> + c0`.
    pub fn objective_value(&self, m: &DMatrix<f64>) -> f64 {
        self.objective.eval(m) + self.offset
    }

    /// Constraint residuals of a candidate point.
    pub fn residuals(&self, m: &DMatrix<f64>) -> Residuals {
        let eq = self
            .equalities
            .iter()
            .map(|c| (c.coef.eval(m) - c.rhs).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|c| (c.coef.eval(m) - c.rhs).max(0.0))
            .fold(0.0, f64::max);
        let lambda_min = crate::solver::min_eigenvalue(m).unwrap_or(f64::NEG_INFINITY);
        Residuals { equality: eq, inequality: ineq, lambda_min }
    }

    /// Serializes to the line-oriented text format (1-based indices).
    ///
    /// ```text
    /// conic-problem <kind> <order>
    /// @trace <t>
    /// objective obj <offset> : r c v ; r c v ...
    /// <label> eq <rhs> : r c v ; ...
    /// <label> le <rhs> : r c v ; ...
    /// @tight <label>
    /// @face <dim> : r k v ; ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = format!("conic-problem {} {}\n", self.kind, self.block_order);
        if let Some(t) = self.fixed_trace {
            let _ = writeln!(s, "{TRACE_LABEL} {t}");
        }
        let line = |s: &mut String, label: &str, sense: &str, rhs: f64, coef: &SparseSym| {
            let _ = write!(s, "{label} {sense} {rhs} :");
            for (i, &(r, c, v)) in coef.entries().iter().enumerate() {
                let sep = if i == 0 { "" } else { " ;" };
                let _ = write!(s, "{sep} {} {} {v}", r + 1, c + 1);
            }
            s.push('\n');
        };
        line(&mut s, "objective", "obj", self.offset, &self.objective);
        for c in &self.equalities {
            line(&mut s, &c.label, "eq", c.rhs, &c.coef);
        }
        for c in &self.inequalities {
            line(&mut s, &c.label, "le", c.rhs, &c.coef);
        }
        for t in &self.tight {
            let _ = writeln!(s, "@tight {t}");
        }
        if let Some(f) = &self.face {
            let _ = write!(s, "@face {} :", f.dim());
            let mut first = true;
            for (k, col) in f.columns().iter().enumerate() {
                for &(r, v) in col {
                    let _ = write!(s, "{} {} {} {v}", if first { "" } else { " ;" }, r + 1, k + 1);
                    first = false;
                }
            }
            s.push('\n');
        }
        s
    }

    /// Parses the format written by [`ConicProblem::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "conic-problem" {
            return Err(perr(hl, "expected `conic-problem <kind> <order>`"));
        }
        let kind: RelaxationKind = h[1].parse()?;
        let order: usize = h[2].parse().map_err(|_| perr(hl, "bad block order"))?;
        let mut problem: Option<ConicProblem> = None;
        let mut trace = None;
        let mut tight = Vec::new();
        let mut face = None;
        for (ln, l) in lines {
            if let Some(rest) = l.strip_prefix(TRACE_LABEL) {
                trace = Some(rest.trim().parse::<f64>().map_err(|_| perr(ln, "bad trace"))?);
                continue;
            }
            if let Some(rest) = l.strip_prefix("@tight") {
                tight.push((ln, rest.trim().to_string()));
                continue;
            }
            if let Some(rest) = l.strip_prefix("@face") {
                let (dim, body) = rest.split_once(':').ok_or_else(|| perr(ln, "missing `:`"))?;
                let dim: usize = dim.trim().parse().map_err(|_| perr(ln, "bad face dimension"))?;
                let mut cols = vec![Vec::new(); dim];
                for trip in body.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                    let t: Vec<&str> = trip.split_whitespace().collect();
                    let parsed = (t.len() == 3)
                        .then(|| Some((t[0].parse::<usize>().ok()?, t[1].parse::<usize>().ok()?, t[2].parse::<f64>().ok()?)))
                        .flatten();
                    match parsed {
                        Some((r, k, v)) if r > 0 && k > 0 && k <= dim => cols[k - 1].push((r - 1, v)),
                        _ => return Err(perr(ln, "bad face triplet")),
                    }
                }
                face = Some((ln, Face::new(order, cols)?));
                continue;
            }
            let (head, body) = l.split_once(':').ok_or_else(|| perr(ln, "missing `:`"))?;
            let head: Vec<&str> = head.split_whitespace().collect();
            if head.len() != 3 {
                return Err(perr(ln, "expected `<label> <sense> <rhs>`"));
            }
            let rhs: f64 = head[2].parse().map_err(|_| perr(ln, "bad rhs"))?;
            let mut coef = SparseSym::new();
            for trip in body.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                let t: Vec<&str> = trip.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(perr(ln, "triplet needs `row col value`"));
                }
                let r: usize = t[0].parse().map_err(|_| perr(ln, "bad row"))?;
                let c: usize = t[1].parse().map_err(|_| perr(ln, "bad col"))?;
                let v: f64 = t[2].parse().map_err(|_| perr(ln, "bad value"))?;
                if r == 0 || c == 0 {
                    return Err(perr(ln, "indices are 1-based"));
                }
                coef.add(r - 1, c - 1, v);
            }
            match (head[1], problem.as_mut()) {
                ("obj", None) => problem = Some(ConicProblem::new(order, kind, coef, rhs)?),
                ("eq", Some(p)) => p.add_equality(head[0], coef, rhs)?,
                ("le", Some(p)) => {
                    if !p.add_inequality(head[0], coef, rhs)? {
                        return Err(perr(ln, "duplicate label"));
                    }
                }
                _ => return Err(perr(ln, "objective line must come first and only once")),
            }
        }
        let mut p = problem.ok_or_else(|| perr(hl, "missing objective line"))?;
        p.fixed_trace = trace;
        for (ln, label) in tight {
            p.mark_tight(&label).map_err(|_| perr(ln, "`@tight` names no inequality"))?;
        }
        if let Some((ln, f)) = face {
            p.set_face(f).map_err(|_| perr(ln, "face does not match block order"))?;
        }
        Ok(p)
    }
}

/// Feasibility measures of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub equality: f64,
    pub inequality: f64,
    pub lambda_min: f64,
}

impl Residuals {
    pub fn feasible(&self, tol: f64) -> bool {
        self.equality <= tol && self.inequality <= tol && self.lambda_min >= -tol
    }
}

fn offdiag_objective(l: &DMatrix<f64>, scale: f64, shift: usize, into: &mut SparseSym) {
    let n = l.nrows();
    for j in 0..n {
        for i in 0..=j {
            let v = l[(i, j)];
            if v != 0.0 {
                let c = if i == j { scale * v } else { 2.0 * scale * v };
                into.add(i + shift, j + shift, c);
            }
        }
    }
}

fn all_entries(n: usize, shift: usize, diag: f64, off: f64) -> SparseSym {
    let mut e = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            e.push((i + shift, j + shift, if i == j { diag } else { off }));
        }
    }
    SparseSym::from_entries(e)
}

/// Relaxation over `M = 2X - J`: `diag(M) = e`, `<J, M> = 2(m1^2 + m2^2) - n^2`,
/// objective `tr(LX)/2 = tr(LM)/4`.
pub fn build_basic(inst: &BisectionInstance) -> ConicProblem {
    let n = inst.n();
    let (m1, m2) = (inst.m1() as f64, inst.m2() as f64);
    let l = laplacian(inst.graph());
    let mut obj = SparseSym::new();
    offdiag_objective(&l, 0.25, 0, &mut obj);
    let mut p = ConicProblem::new(n, RelaxationKind::Basic, obj, 0.0).expect("valid order");
    for i in 0..n {
        p.add_equality(format!("diag({})", i + 1), SparseSym::from_entries(vec![(i, i, 1.0)]), 1.0)
            .expect("fresh label");
    }
    let nf = n as f64;
    p.add_equality("j-trace", all_entries(n, 0, 1.0, 2.0), 2.0 * (m1 * m1 + m2 * m2) - nf * nf)
        .expect("fresh label");
    p.set_fixed_trace(nf);
    p
}

/// Order-n relaxation in `X` with `x = diag(X)`; objective `tr(LX)`.
pub fn build_new(inst: &BisectionInstance, with_nonneg: bool) -> ConicProblem {
    let n = inst.n();
    let m1 = inst.m1() as f64;
    let l = laplacian(inst.graph());
    let mut obj = SparseSym::new();
    offdiag_objective(&l, 1.0, 0, &mut obj);
    let kind = if with_nonneg { RelaxationKind::New } else { RelaxationKind::NewBare };
    let mut p = ConicProblem::new(n, kind, obj, 0.0).expect("valid order");

    let trace = SparseSym::from_entries((0..n).map(|i| (i, i, 1.0)).collect());
    p.add_equality("trace", trace, m1).expect("fresh label");
    p.add_equality("j-trace", all_entries(n, 0, 1.0, 2.0), m1 * m1).expect("fresh label");
    for i in 0..n {
        let mut row = SparseSym::new();
        for j in 0..n {
            row.add(i, j, if i == j { 1.0 - m1 } else { 1.0 });
        }
        p.add_equality(format!("row-sum({})", i + 1), row, 0.0).expect("fresh label");
    }

    if with_nonneg {
        for j in 0..n {
            for i in 0..=j {
                let c = SparseSym::from_entries(vec![(i, j, -1.0)]);
                p.add_inequality(format!("nonneg({},{})", i + 1, j + 1), c, 0.0).expect("valid");
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    // X_ij <= X_ii
                    let c = SparseSym::from_entries(vec![(i.min(j), i.max(j), 1.0), (i, i, -1.0)]);
                    p.add_inequality(format!("bqp-ub({},{})", i + 1, j + 1), c, 0.0).expect("valid");
                }
            }
        }
        for j in 0..n {
            for i in 0..j {
                // X_ii + X_jj - X_ij <= 1
                let c = SparseSym::from_entries(vec![(i, i, 1.0), (j, j, 1.0), (i, j, -1.0)]);
                p.add_inequality(format!("bqp-tri0({},{})", i + 1, j + 1), c, 1.0).expect("valid");
            }
        }
        for i in 0..n {
            let c = SparseSym::from_entries(vec![(i, i, 1.0)]);
            p.add_inequality(format!("diag-ub({})", i + 1), c, 1.0).expect("valid");
        }
        // A part of size one forces a whole pairwise family to zero: the
        // family is nonnegative and sums to m(m-1).
        for j in 0..n {
            for i in 0..j {
                if inst.m1() == 1 {
                    p.mark_tight(&format!("nonneg({},{})", i + 1, j + 1)).expect("present");
                }
                if inst.m2() == 1 {
                    p.mark_tight(&format!("bqp-tri0({},{})", i + 1, j + 1)).expect("present");
                }
            }
        }
    }
    p.set_fixed_trace(m1);
    p
}

/// Vector-lifting relaxation over the bordered matrix `[[1, y^T], [y, Y]]`
/// of order `2n + 1`. Index 0 is the border; `Y11` occupies `1..=n` and
/// `Y22` occupies `n+1..=2n`.
pub fn build_wz(inst: &BisectionInstance) -> ConicProblem {
    let n = inst.n();
    let (m1, m2) = (inst.m1() as f64, inst.m2() as f64);
    let l = laplacian(inst.graph());
    let mut obj = SparseSym::new();
    offdiag_objective(&l, 0.5, 1, &mut obj);
    offdiag_objective(&l, 0.5, 1 + n, &mut obj);
    let order = 2 * n + 1;
    let mut p = ConicProblem::new(order, RelaxationKind::Wz, obj, 0.0).expect("valid order");

    for (b, m) in [(1usize, m1), (2, m2)] {
        let shift = 1 + (b - 1) * n;
        let tr = SparseSym::from_entries((0..n).map(|i| (i + shift, i + shift, 1.0)).collect());
        p.add_equality(format!("tr-y{b}{b}"), tr, m).expect("fresh label");
        p.add_equality(format!("j-y{b}{b}"), all_entries(n, shift, 1.0, 2.0), m * m).expect("fresh label");
    }
    for i in 0..n {
        let c = SparseSym::from_entries(vec![(1 + i, 1 + n + i, 1.0)]);
        p.add_equality(format!("diag-y12({})", i + 1), c, 0.0).expect("fresh label");
    }
    let mut cross = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cross.push((1 + i, 1 + n + j, 2.0));
        }
    }
    p.add_equality("j-y12", SparseSym::from_entries(cross), 2.0 * m1 * m2).expect("fresh label");
    p.add_equality("corner", SparseSym::from_entries(vec![(0, 0, 1.0)]), 1.0).expect("fresh label");
    for k in 1..order {
        let c = SparseSym::from_entries(vec![(0, k, 1.0), (k, k, -1.0)]);
        p.add_equality(format!("border({k})"), c, 0.0).expect("fresh label");
    }
    for j in 1..order {
        for i in 1..=j {
            if j == i + n {
                continue; // fixed to zero by diag-y12
            }
            let c = SparseSym::from_entries(vec![(i, j, -1.0)]);
            p.add_inequality(format!("nonneg({i},{j})"), c, 0.0).expect("valid");
            // off-diagonal Y_bb sums to m_b(m_b - 1)
            let same_block = (j <= n && inst.m1() == 1) || (i > n && inst.m2() == 1);
            if i != j && same_block {
                p.mark_tight(&format!("nonneg({i},{j})")).expect("present");
            }
        }
    }
    p.set_fixed_trace((n + 1) as f64);
    p.set_face(wz_face(n, inst.m1())).expect("face matches order");
    p
}

/// Every feasible bordered matrix annihilates `(-1; e_i; e_i)` for each
/// `i` (border, diagonal and `diag(Y12) = 0` rows) and `(-m1; e; 0)` (trace
/// and `J`-trace of `Y11`), so it lives on the complement of their span,
/// which has dimension `n`.
fn wz_face(n: usize, m1: usize) -> Face {
    let order = 2 * n + 1;
    let mut null = DMatrix::<f64>::zeros(order, n + 1);
    for i in 0..n {
        null[(0, i)] = -1.0;
        null[(1 + i, i)] = 1.0;
        null[(1 + n + i, i)] = 1.0;
        null[(1 + i, n)] = 1.0;
    }
    null[(0, n)] = -(m1 as f64);
    let eig = nalgebra::SymmetricEigen::new(&null * null.transpose());
    let mut idx: Vec<usize> = (0..order).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let cols = idx[..n]
        .iter()
        .map(|&k| {
            let v = eig.eigenvectors.column(k);
            v.iter().enumerate().filter(|(_, x)| x.abs() > 1e-15).map(|(r, &x)| (r, x)).collect()
        })
        .collect();
    Face::new(order, cols).expect("eigenvectors are orthonormal")
}

/// Builds the requested relaxation.
pub fn build(kind: RelaxationKind, inst: &BisectionInstance) -> ConicProblem {
    match kind {
        RelaxationKind::Basic => build_basic(inst),
        RelaxationKind::New => build_new(inst, true),
        RelaxationKind::NewBare => build_new(inst, false),
        RelaxationKind::Wz => build_wz(inst),
    }
}

/// `(m1/n) I + m1(m1-1)/(n(n-1)) (J - I)`, an interior point of the order-n
/// relaxation.
pub fn strictly_feasible_point(inst: &BisectionInstance) -> DMatrix<f64> {
    let n = inst.n() as f64;
    let m1 = inst.m1() as f64;
    let d = m1 / n;
    let o = m1 * (m1 - 1.0) / (n * (n - 1.0));
    DMatrix::from_fn(inst.n(), inst.n(), |i, j| if i == j { d } else { o })
}

/// The point of the given relaxation that corresponds to a bisection.
pub fn integer_point(kind: RelaxationKind, a: &Assignment) -> DMatrix<f64> {
    let z = a.indicator();
    let n = z.len();
    match kind {
        RelaxationKind::Basic => {
            let u: Vec<f64> = z.iter().map(|&v| 2.0 * v - 1.0).collect();
            DMatrix::from_fn(n, n, |i, j| u[i] * u[j])
        }
        RelaxationKind::New | RelaxationKind::NewBare => DMatrix::from_fn(n, n, |i, j| z[i] * z[j]),
        RelaxationKind::Wz => {
            let mut v = Vec::with_capacity(2 * n + 1);
            v.push(1.0);
            v.extend(z.iter().copied());
            v.extend(z.iter().map(|&t| 1.0 - t));
            DMatrix::from_fn(2 * n + 1, 2 * n + 1, |i, j| v[i] * v[j])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cut_value, parse_instance, Graph};

    fn star() -> BisectionInstance {
        parse_instance("4 3 3 1\n1 2\n2 3\n2 4\n").unwrap()
    }

    #[test]
    fn counts() {
        let inst = star();
        assert_eq!(build_basic(&inst).equalities().len(), 5);
        let p = build_new(&inst, true);
        assert_eq!(p.equalities().len(), 6);
        // 10 nonneg + 12 ub + 6 tri0 + 4 diag
        assert_eq!(p.inequalities().len(), 32);
        let bare = build_new(&inst, false);
        assert!(bare.inequalities().is_empty());
        assert_eq!(bare.equalities(), p.equalities());
        assert_eq!(bare.objective(), p.objective());

        let small = BisectionInstance::new(Graph::unweighted(3, [(0, 1)]).unwrap(), 2, 1).unwrap();
        let wz = build_wz(&small);
        assert_eq!(wz.block_order(), 7);
        assert_eq!(wz.equalities().len(), 15);
        // 21 upper-triangle entries of Y, minus the 3 pinned by diag-y12
        assert_eq!(wz.inequalities().len(), 18);
    }

    #[test]
    fn face_contains_integer_points() {
        let inst = parse_instance("5 4 3 2\n1 2\n2 3\n3 4\n4 5\n").unwrap();
        let p = build_wz(&inst);
        let face = p.face().unwrap();
        assert_eq!(face.dim(), 5);
        let v = face.basis();
        let proj = &v * v.transpose();
        for first in [[0usize, 1, 2], [2, 3, 4], [0, 2, 4]] {
            let a = Assignment::from_first_part(5, &first).unwrap();
            let y = integer_point(RelaxationKind::Wz, &a);
            assert!((&proj * &y * &proj - &y).amax() < 1e-12);
            // reduced functionals agree on W = V^T Y V
            let w = face.compress(&y);
            let r = p.reduced();
            for (full, red) in p.equalities().iter().zip(r.equalities()) {
                assert!((full.coef.eval(&y) - red.coef.eval(&w)).abs() < 1e-12, "{}", full.label);
            }
            assert!((p.objective_value(&y) - r.objective_value(&w)).abs() < 1e-12);
        }
        assert!(Face::new(3, vec![vec![(0, 1.0)], vec![(0, 1.0)]]).is_err());
    }

    #[test]
    fn singleton_part_marks_tight_rows() {
        let inst = star();
        let new = build_new(&inst, true);
        let wz = build_wz(&inst);
        assert!(new.is_tight("bqp-tri0(1,2)") && !new.is_tight("nonneg(1,2)"));
        // Y22 occupies indices 5..=8 for n = 4
        assert!(wz.is_tight("nonneg(5,6)") && !wz.is_tight("nonneg(1,2)") && !wz.is_tight("nonneg(5,5)"));
        for first in [[0usize, 1, 2], [1, 2, 3]] {
            let a = Assignment::from_first_part(4, &first).unwrap();
            for p in [&new, &wz] {
                let m = integer_point(p.kind(), &a);
                for c in p.inequalities().iter().filter(|c| p.is_tight(&c.label)) {
                    assert_eq!(c.coef.eval(&m), c.rhs, "{}", c.label);
                }
            }
        }
        let r = new.reduced();
        let tight = new.inequalities().iter().filter(|c| new.is_tight(&c.label)).count();
        assert_eq!(tight, 6);
        assert_eq!(r.equalities().len(), new.equalities().len() + tight);
        assert_eq!(r.inequalities().len(), new.inequalities().len() - tight);
        let mut q = new.clone();
        assert!(q.mark_tight("trace").is_err());
    }

    #[test]
    fn integer_points_calibrate_objectives() {
        let inst = star();
        for first in [[0usize, 1, 2], [0, 2, 3], [1, 2, 3], [0, 1, 3]] {
            let a = Assignment::from_first_part(4, &first).unwrap();
            let cut = cut_value(inst.graph(), &a).unwrap();
            for kind in RelaxationKind::ALL {
                let p = build(kind, &inst);
                let m = integer_point(kind, &a);
                assert!(p.residuals(&m).feasible(1e-12), "{kind} infeasible at integer point");
                assert_eq!(p.objective_value(&m), cut, "{kind}");
                assert_eq!(p.fixed_trace().unwrap(), m.trace());
            }
        }
    }

    #[test]
    fn strictly_feasible_point_closed_form() {
        let inst = star();
        let x = strictly_feasible_point(&inst);
        assert_eq!(x[(0, 0)], 0.75);
        assert_eq!(x[(0, 1)], 0.5);
        let p = build_new(&inst, true);
        let r = p.residuals(&x);
        assert!(r.equality < 1e-14 && r.inequality == 0.0 && r.lambda_min > 0.0);
        for c in p.inequalities() {
            assert!(c.coef.eval(&x) <= c.rhs + 1e-15, "{} violated", c.label);
        }
        // X_11 + X_22 - X_12 = 1: the point touches a pair inequality here
        let tri = p.inequalities().iter().find(|c| c.label == "bqp-tri0(1,2)").unwrap();
        assert_eq!(tri.coef.eval(&x), tri.rhs);

        let edge = BisectionInstance::new(Graph::unweighted(2, [(0, 1)]).unwrap(), 1, 1).unwrap();
        let x = strictly_feasible_point(&edge);
        assert_eq!(x, DMatrix::from_diagonal_element(2, 2, 0.5));
        let p = build_new(&edge, true);
        assert!(p.residuals(&x).feasible(1e-15));
        // X_12 = 0 sits on the nonnegativity boundary
        let nonneg = p.inequalities().iter().find(|c| c.label == "nonneg(1,2)").unwrap();
        assert_eq!(nonneg.coef.eval(&x), nonneg.rhs);
    }

    #[test]
    fn laplacian_offsets_vanish() {
        let inst = star();
        let l = laplacian(inst.graph());
        let j = DMatrix::from_element(4, 4, 1.0);
        assert_eq!((&l * &j).trace(), 0.0);
        let x = nalgebra::DVector::from_vec(vec![0.3, -1.2, 2.5, 0.7]);
        let e = nalgebra::DVector::from_element(4, 1.0);
        assert!((e.transpose() * &l * x)[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        let inst = star();
        for kind in RelaxationKind::ALL {
            let p = build(kind, &inst);
            let q = ConicProblem::from_text(&p.to_text()).unwrap();
            assert_eq!(q.to_text(), p.to_text());
            assert_eq!(q.fixed_trace(), p.fixed_trace());
            assert_eq!(q.inequalities().len(), p.inequalities().len());
        }
        assert!(ConicProblem::from_text("conic-problem new 3\nx eq 1 : 1 1 1\n").is_err());
    }

    #[test]
    fn labels_are_unique() {
        let mut p = build_new(&star(), true);
        assert!(p.add_equality("trace", SparseSym::new(), 0.0).is_err());
        assert!(!p.add_inequality("nonneg(1,1)", SparseSym::new(), 0.0).unwrap());
        assert!(p.add_inequality(TRACE_LABEL, SparseSym::new(), 0.0).is_err());
        assert!(p.add_inequality("bad", SparseSym::from_entries(vec![(0, 9, 1.0)]), 0.0).is_err());
        assert!(p.remove_equality("trace"));
        assert!(!p.has_label("trace"));
    }

    #[test]
    fn sparse_sym_matrix_agrees_with_functional() {
        let mut s = SparseSym::new();
        s.add(0, 1, 3.0);
        s.add(2, 2, -1.0);
        s.add(1, 0, 1.0);
        let m = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 + if i == j { 0.0 } else { (i + j) as f64 });
        let m = (&m + m.transpose()) * 0.5;
        let a = s.to_matrix(3);
        assert!((a.component_mul(&m).sum() - s.eval(&m)).abs() < 1e-12);
        assert_eq!(SparseSym::from_matrix(&a).eval(&m), s.eval(&m));
    }
}
