//! Weighted undirected graphs, bisection instances and cut evaluation.
//!
//! Vertices are 0-based in memory and 1-based in text files. The instance
//! format is a header line `n |E| m1 m2` followed by `|E|` lines `i j` or
//! `i j w`; `#` starts a comment.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with `u < v` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Simple weighted graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    integral_weights: bool,
}

impl Graph {
    /// Builds a graph from 0-based `(u, v, w)` triples.
    ///
    /// Endpoints are normalized to `u < v`. Self-loops, duplicates and
    /// non-finite weights are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 vertices, got {n}")));
        }
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidGraph(format!("non-finite weight on edge ({a}, {b})")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            out.push(Edge { u, v, w });
        }
        out.sort_by_key(|e| (e.u, e.v));
        if let Some(pair) = out.windows(2).find(|p| p[0].u == p[1].u && p[0].v == p[1].v) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", pair[0].u, pair[0].v)));
        }
        Ok(Self::from_sorted(n, out))
    }

    /// Unit-weight graph from 0-based pairs.
    pub fn unweighted(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    fn from_sorted(n: usize, edges: Vec<Edge>) -> Self {
        let integral_weights = edges.iter().all(|e| e.w.fract() == 0.0);
        Self { n, edges, integral_weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// True iff every weight is an integer.
    pub fn integral_weights(&self) -> bool {
        self.integral_weights
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    pub fn is_regular(&self, k: usize) -> bool {
        self.degrees().iter().all(|&d| d == k)
    }

    /// Dense symmetric weight matrix.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.u, e.v)] += e.w;
            a[(e.v, e.u)] += e.w;
        }
        a
    }

    /// Neighbor lists with weights.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }
}

/// `L = Diag(Ae) - A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(g.n(), g.n());
    for e in g.edges() {
        l[(e.u, e.v)] -= e.w;
        l[(e.v, e.u)] -= e.w;
        l[(e.u, e.u)] += e.w;
        l[(e.v, e.v)] += e.w;
    }
    l
}

/// A graph together with the prescribed part sizes `m1 >= m2 >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionInstance {
    graph: Graph,
    m1: usize,
    m2: usize,
}

impl BisectionInstance {
    pub fn new(graph: Graph, m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidInstance(format!("part sizes must be positive, got ({m1}, {m2})")));
        }
        if m1 + m2 != graph.n() {
            return Err(Error::InvalidInstance(format!(
                "m1 + m2 = {} differs from n = {}",
                m1 + m2,
                graph.n()
            )));
        }
        if m1 < m2 {
            return Err(Error::InvalidInstance(format!("expected m1 >= m2, got ({m1}, {m2})")));
        }
        Ok(Self { graph, m1, m2 })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }
}

/// Vertex-to-part map. `in_first[v]` is true when `v` lies in part 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    in_first: Vec<bool>,
}

impl Assignment {
    /// Accepts any 0/1 split; part sizes are checked against an instance by
    /// [`Assignment::validate`].
    pub fn from_parts(in_first: Vec<bool>) -> Self {
        Self { in_first }
    }

    /// Part 1 = the given 0-based vertices.
    pub fn from_first_part(n: usize, first: &[usize]) -> Result<Self> {
        let mut in_first = vec![false; n];
        for &v in first {
            if v >= n {
                return Err(Error::InvalidAssignment(format!("vertex {v} out of range")));
            }
            in_first[v] = true;
        }
        Ok(Self { in_first })
    }

    pub fn len(&self) -> usize {
        self.in_first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_first.is_empty()
    }

    /// Part (1 or 2) of vertex `v`.
    pub fn part(&self, v: usize) -> u8 {
        if self.in_first[v] {
            1
        } else {
            2
        }
    }

    pub fn in_first(&self) -> &[bool] {
        &self.in_first
    }

    pub fn first_part(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.in_first[v]).collect()
    }

    /// 0/1 indicator of part 1.
    pub fn indicator(&self) -> Vec<f64> {
        self.in_first.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn validate(&self, inst: &BisectionInstance) -> Result<()> {
        if self.len() != inst.n() {
            return Err(Error::InvalidAssignment(format!(
                "assignment has {} vertices, instance has {}",
                self.len(),
                inst.n()
            )));
        }
        let k = self.in_first.iter().filter(|&&b| b).count();
        if k != inst.m1() {
            return Err(Error::InvalidAssignment(format!(
                "part 1 has {k} vertices, expected {}",
                inst.m1()
            )));
        }
        Ok(())
    }
}

/// Total weight of edges joining the two parts.
pub fn cut_value(g: &Graph, a: &Assignment) -> Result<f64> {
    if a.len() != g.n() {
        return Err(Error::InvalidAssignment(format!(
            "assignment has {} vertices, graph has {}",
            a.len(),
            g.n()
        )));
    }
    let side = a.in_first();
    if side.iter().all(|&b| b) || side.iter().all(|&b| !b) {
        return Err(Error::InvalidAssignment("one part is empty".into()));
    }
    Ok(g.edges().iter().filter(|e| side[e.u] != side[e.v]).map(|e| e.w).sum())
}

/// Parses the plain-text instance format.
pub fn parse_instance(text: &str) -> Result<BisectionInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty input".into() })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 4 {
        return Err(Error::Parse { line: hline, msg: format!("header needs 4 fields `n |E| m1 m2`, got {}", head.len()) });
    }
    let field = |s: &str, what: &str| -> Result<i64> {
        s.parse::<i64>()
            .map_err(|_| Error::Parse { line: hline, msg: format!("bad {what} `{s}`") })
    };
    let n = field(head[0], "n")?;
    let num_edges = field(head[1], "|E|")?;
    let m1 = field(head[2], "m1")?;
    let m2 = field(head[3], "m2")?;
    if n < 2 || num_edges < 0 {
        return Err(Error::Parse { line: hline, msg: "need n >= 2 and |E| >= 0".into() });
    }
    if m1 <= 0 || m2 <= 0 {
        return Err(Error::InvalidInstance(format!("part sizes must be positive, got ({m1}, {m2})")));
    }
    if m1 + m2 != n {
        return Err(Error::InvalidInstance(format!("m1 + m2 = {} differs from n = {n}", m1 + m2)));
    }
    let n = n as usize;

    let mut weights: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    let mut count = 0usize;
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 && f.len() != 3 {
            return Err(Error::Parse { line: ln, msg: "edge line needs `i j` or `i j w`".into() });
        }
        let idx = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| Error::Parse { line: ln, msg: format!("bad vertex `{s}`") })?;
            if v == 0 || v > n {
                return Err(Error::Parse { line: ln, msg: format!("vertex {v} out of range 1..={n}") });
            }
            Ok(v - 1)
        };
        let (a, b) = (idx(f[0])?, idx(f[1])?);
        let w = match f.get(2) {
            Some(s) => s
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| Error::Parse { line: ln, msg: format!("bad weight `{s}`") })?,
            None => 1.0,
        };
        if a == b {
            return Err(Error::Parse { line: ln, msg: format!("self-loop at vertex {}", a + 1) });
        }
        *weights.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        count += 1;
    }
    if count != num_edges as usize {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header announces {num_edges} edges, found {count}"),
        });
    }
    let graph = Graph::new(n, weights.into_iter().map(|((u, v), w)| (u, v, w)))?;
    BisectionInstance::new(graph, m1 as usize, m2 as usize)
}

/// Writes an instance in the format accepted by [`parse_instance`].
pub fn write_instance(inst: &BisectionInstance) -> String {
    let g = inst.graph();
    let mut s = format!("{} {} {} {}\n", g.n(), g.num_edges(), inst.m1(), inst.m2());
    for e in g.edges() {
        if e.w == 1.0 {
            let _ = writeln!(s, "{} {}", e.u + 1, e.v + 1);
        } else {
            let _ = writeln!(s, "{} {} {}", e.u + 1, e.v + 1, e.w);
        }
    }
    s
}
