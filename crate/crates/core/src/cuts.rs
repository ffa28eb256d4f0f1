//! Triangle inequalities of the boolean quadric polytope on the order-n
//! relaxation, with `x_ii` read as the diagonal of `X`:
//!
//! * `TriA(i, j, k)`: `x_ik + x_jk - x_kk - x_ij <= 0`, `i < j`, `k` free;
//! * `TriB(i, j, k)`: `x_ii + x_jj + x_kk - x_ij - x_ik - x_jk <= 1`, `i < j < k`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConicProblem, RelaxationKind, SparseSym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CutKind {
    TriA,
    TriB,
}

/// A triangle inequality with 0-based indices, normalized as described in
/// the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// Violation at separation time.
    pub violation: f64,
}

impl Cut {
    /// Normalizes the triple; fails when indices repeat.
    pub fn new(kind: CutKind, i: usize, j: usize, k: usize) -> Result<Self> {
        if i == j || i == k || j == k {
            return Err(Error::OutOfRange(format!("cut indices ({i}, {j}, {k}) are not distinct")));
        }
        let (i, j, k) = match kind {
            CutKind::TriA => (i.min(j), i.max(j), k),
            CutKind::TriB => {
                let mut t = [i, j, k];
                t.sort_unstable();
                (t[0], t[1], t[2])
            }
        };
        Ok(Self { kind, i, j, k, violation: 0.0 })
    }

    pub fn key(&self) -> (CutKind, usize, usize, usize) {
        (self.kind, self.i, self.j, self.k)
    }

    /// `lhs - rhs` at `x`; positive means violated.
    pub fn violation_at(&self, x: &DMatrix<f64>) -> f64 {
        let (i, j, k) = (self.i, self.j, self.k);
        match self.kind {
            CutKind::TriA => x[(i, k)] + x[(j, k)] - x[(k, k)] - x[(i, j)],
            CutKind::TriB => x[(i, i)] + x[(j, j)] + x[(k, k)] - x[(i, j)] - x[(i, k)] - x[(j, k)] - 1.0,
        }
    }

    /// Linear functional and right-hand side.
    pub fn row(&self) -> (SparseSym, f64) {
        let (i, j, k) = (self.i, self.j, self.k);
        let mut s = SparseSym::new();
        match self.kind {
            CutKind::TriA => {
                s.add(i, k, 1.0);
                s.add(j, k, 1.0);
                s.add(k, k, -1.0);
                s.add(i, j, -1.0);
                (s, 0.0)
            }
            CutKind::TriB => {
                s.add(i, i, 1.0);
                s.add(j, j, 1.0);
                s.add(k, k, 1.0);
                s.add(i, j, -1.0);
                s.add(i, k, -1.0);
                s.add(j, k, -1.0);
                (s, 1.0)
            }
        }
    }

    /// Constraint label, 1-based.
    pub fn label(&self) -> String {
        format!("bqp-cut({},{},{},{})", self, self.i + 1, self.j + 1, self.k + 1)
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.kind {
            CutKind::TriA => "A",
            CutKind::TriB => "B",
        })
    }
}

/// Every triangle inequality violated by more than `eps`, most violated
/// first, ties broken by `(kind, i, j, k)`, truncated to `limit`.
pub fn separate(x: &DMatrix<f64>, limit: usize, eps: f64) -> Vec<Cut> {
    let n = x.nrows();
    let mut found = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let base = x[(i, j)];
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let v = x[(i, k)] + x[(j, k)] - x[(k, k)] - base;
                if v > eps {
                    found.push(Cut { kind: CutKind::TriA, i, j, k, violation: v });
                }
            }
            let pair = x[(i, i)] + x[(j, j)] - base - 1.0;
            for k in j + 1..n {
                let v = pair + x[(k, k)] - x[(i, k)] - x[(j, k)];
                if v > eps {
                    found.push(Cut { kind: CutKind::TriB, i, j, k, violation: v });
                }
            }
        }
    }
    found.sort_by(|a, b| b.violation.total_cmp(&a.violation).then_with(|| a.key().cmp(&b.key())));
    found.truncate(limit);
    found
}

/// Appends each cut as a labelled inequality; repeated cuts are skipped.
/// Returns the number of rows added.
pub fn append_cuts_in_place(p: &mut ConicProblem, cuts: &[Cut]) -> Result<usize> {
    if !matches!(p.kind(), RelaxationKind::New | RelaxationKind::NewBare) {
        return Err(Error::UnsupportedProblem(format!("cuts apply to the order-n model, not `{}`", p.kind())));
    }
    let n = p.block_order();
    if let Some(c) = cuts.iter().find(|c| c.i.max(c.j).max(c.k) >= n) {
        return Err(Error::OutOfRange(format!("cut {} does not fit order {n}", c.label())));
    }
    let mut added = 0;
    for c in cuts {
        let (coef, rhs) = c.row();
        if p.add_inequality(c.label(), coef, rhs)? {
            added += 1;
        }
    }
    Ok(added)
}

/// Copy of `p` with the cuts appended.
pub fn append_cuts(p: &ConicProblem, cuts: &[Cut]) -> Result<ConicProblem> {
    let mut q = p.clone();
    append_cuts_in_place(&mut q, cuts)?;
    Ok(q)
}

/// Cuts added during a run, stamped with the round that introduced them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CutPool {
    cuts: BTreeMap<(CutKind, usize, usize, usize), (Cut, usize)>,
    cap: usize,
}

impl CutPool {
    pub fn new(cap: usize) -> Self {
        Self { cuts: BTreeMap::new(), cap }
    }

    /// Pool with the default cap `40 n`.
    pub fn for_order(n: usize) -> Self {
        Self::new(40 * n)
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn is_full(&self) -> bool {
        self.cuts.len() >= self.cap
    }

    pub fn contains(&self, c: &Cut) -> bool {
        self.cuts.contains_key(&c.key())
    }

    /// Inserts unless present or full.
    pub fn insert(&mut self, c: Cut, round: usize) -> bool {
        if self.is_full() || self.contains(&c) {
            return false;
        }
        self.cuts.insert(c.key(), (c, round));
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Cut, usize)> {
        self.cuts.values().map(|(c, r)| (c, *r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BisectionInstance, Graph};
    use crate::model::{build_new, strictly_feasible_point};

    #[test]
    fn trib_example() {
        let x = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.9 } else { 0.5 });
        let cuts = separate(&x, usize::MAX, 1e-6);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].key(), (CutKind::TriB, 0, 1, 2));
        assert!((cuts[0].violation - 0.2).abs() < 1e-12);
    }

    #[test]
    fn binary_points_have_no_violations() {
        for mask in 0u32..(1 << 6) {
            let z: Vec<f64> = (0..6).map(|i| ((mask >> i) & 1) as f64).collect();
            let x = DMatrix::from_fn(6, 6, |i, j| z[i] * z[j]);
            assert!(separate(&x, usize::MAX, 0.0).is_empty(), "mask {mask:b}");
        }
    }

    #[test]
    fn interior_point_has_no_tria_cuts() {
        let g = Graph::unweighted(18, []).unwrap();
        let inst = BisectionInstance::new(g, 10, 8).unwrap();
        let x = strictly_feasible_point(&inst);
        assert!((x[(0, 0)] - 5.0 / 9.0).abs() < 1e-15);
        assert!((x[(0, 1)] - 45.0 / 153.0).abs() < 1e-15);
        assert!(separate(&x, usize::MAX, 1e-6).iter().all(|c| c.kind == CutKind::TriB));
    }

    #[test]
    fn ordering_and_limit() {
        let x = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.9 } else { 0.4 + 0.01 * (i + j) as f64 });
        let all = separate(&x, usize::MAX, 1e-6);
        assert!(all.windows(2).all(|w| w[0].violation >= w[1].violation));
        let top = separate(&x, 3, 1e-6);
        assert_eq!(top.len(), 3);
        assert_eq!(top[..], all[..3]);
    }

    #[test]
    fn append_skips_duplicates() {
        let g = Graph::unweighted(18, [(0, 1)]).unwrap();
        let inst = BisectionInstance::new(g, 10, 8).unwrap();
        let p = build_new(&inst, true);
        let base = p.inequalities().len();
        assert_eq!(append_cuts(&p, &[]).unwrap().inequalities().len(), base);
        let c = Cut::new(CutKind::TriA, 3, 1, 2).unwrap();
        assert_eq!((c.i, c.j, c.k), (1, 3, 2));
        let q = append_cuts(&p, &[c, c]).unwrap();
        assert_eq!(q.inequalities().len(), base + 1);
        assert!(q.has_label("bqp-cut(A,2,4,3)"));

        let many: Vec<Cut> = (0..36).map(|t| Cut::new(CutKind::TriB, t % 18, (t + 1) % 18, (t + 5) % 18).unwrap()).collect();
        let q = append_cuts(&p, &many).unwrap();
        assert!(q.inequalities().len() - base <= 36);

        let bad = Cut { kind: CutKind::TriA, i: 0, j: 1, k: 18, violation: 0.0 };
        assert!(matches!(append_cuts(&p, &[bad]), Err(Error::OutOfRange(_))));
        assert!(Cut::new(CutKind::TriB, 1, 1, 2).is_err());
    }

    #[test]
    fn pool_respects_cap() {
        let mut pool = CutPool::new(2);
        let a = Cut::new(CutKind::TriA, 0, 1, 2).unwrap();
        let b = Cut::new(CutKind::TriB, 0, 1, 2).unwrap();
        let c = Cut::new(CutKind::TriA, 0, 2, 1).unwrap();
        assert!(pool.insert(a, 0));
        assert!(!pool.insert(a, 1));
        assert!(pool.insert(b, 1));
        assert!(!pool.insert(c, 1));
        assert_eq!(pool.len(), 2);
        assert_eq!(CutPool::for_order(18).cap(), 720);
    }
}
