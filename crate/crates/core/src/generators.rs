//! Named and random graph generators.
//!
//! Registry names: `pappus`, `desargues`, `biggs-smith` (LCF codes from
//! `data/lcf_codes.txt`), `johnson:v,k`, `gnp:n,p,seed`, `lcf:repeats;j1,j2,...`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

const LCF_TABLE: &str = include_str!("../data/lcf_codes.txt");

/// A named LCF code as shipped in the data file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedLcf {
    pub name: String,
    pub vertices: usize,
    pub repeats: usize,
    pub jumps: Vec<i64>,
}

/// All codes in the bundled table.
pub fn named_lcf_codes() -> Vec<NamedLcf> {
    LCF_TABLE
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (head, tail) = l.split_once(':').expect("lcf table line without `:`");
            let head: Vec<&str> = head.split_whitespace().collect();
            NamedLcf {
                name: head[0].to_string(),
                vertices: head[1].parse().expect("lcf vertex count"),
                repeats: head[2].parse().expect("lcf repeat count"),
                jumps: tail.split_whitespace().map(|t| t.parse().expect("lcf jump")).collect(),
            }
        })
        .collect()
}

/// Cubic Hamiltonian graph from an LCF code: the cycle `0..n` plus chords
/// `i -> i + jump` where the jump sequence repeats `repeats` times.
pub fn gen_lcf(jumps: &[i64], repeats: usize) -> Result<Graph> {
    if jumps.is_empty() || repeats == 0 {
        return Err(Error::InvalidGraph("empty LCF code".into()));
    }
    let n = jumps.len() * repeats;
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidGraph(format!("LCF code gives n = {n}, need an even n >= 4")));
    }
    let ni = n as i64;
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::with_capacity(3 * n / 2);
    let mut add = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| -> Result<()> {
        if a == b {
            return Err(Error::InvalidGraph(format!("LCF chord is a self-loop at {a}")));
        }
        if seen.insert((a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
        Ok(())
    };
    for i in 0..n {
        add(i, (i + 1) % n, &mut edges)?;
    }
    for i in 0..n {
        let j = jumps[i % jumps.len()];
        if j.abs() < 2 || j.abs() > ni - 2 {
            return Err(Error::InvalidGraph(format!("LCF jump {j} outside 2..={}", ni - 2)));
        }
        let t = (i as i64 + j).rem_euclid(ni) as usize;
        add(i, t, &mut edges)?;
    }
    let g = Graph::unweighted(n, edges)?;
    if g.num_edges() != 3 * n / 2 || !g.is_regular(3) {
        return Err(Error::InvalidGraph("LCF code does not produce a simple cubic graph".into()));
    }
    Ok(g)
}

/// Graph for a named entry of the LCF table, with its vertex count checked.
pub fn named_lcf(name: &str) -> Result<Graph> {
    let code = named_lcf_codes()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
    let g = gen_lcf(&code.jumps, code.repeats)?;
    if g.n() != code.vertices {
        return Err(Error::InvalidGraph(format!(
            "LCF code for {name} gives {} vertices, expected {}",
            g.n(),
            code.vertices
        )));
    }
    Ok(g)
}

/// Johnson graph J(v, k): k-subsets of a v-set, adjacent when they share
/// k - 1 elements. Vertices are ordered lexicographically.
pub fn gen_johnson(v: usize, k: usize) -> Result<Graph> {
    if k == 0 || k >= v {
        return Err(Error::InvalidGraph(format!("J({v},{k}) needs 1 <= k < v")));
    }
    let subsets = k_subsets(v, k);
    if subsets.len() < 2 {
        return Err(Error::InvalidGraph(format!("J({v},{k}) has fewer than 2 vertices")));
    }
    let masks: Vec<u64> = subsets.iter().map(|s| s.iter().fold(0u64, |m, &x| m | (1 << x))).collect();
    let mut edges = Vec::new();
    for a in 0..masks.len() {
        for b in a + 1..masks.len() {
            if (masks[a] & masks[b]).count_ones() as usize == k - 1 {
                edges.push((a, b));
            }
        }
    }
    Graph::unweighted(masks.len(), edges)
}

fn k_subsets(v: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < v - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Erdős–Rényi G(n, p), deterministic for a fixed seed.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidGraph(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::unweighted(n, edges)
}

/// Resolves a registry name such as `pappus`, `johnson:7,2` or `gnp:30,0.3,42`.
pub fn generate(spec: &str) -> Result<Graph> {
    let (kind, args) = match spec.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let bad = || Error::UnknownGenerator(spec.to_string());
    match (kind, args) {
        ("johnson", Some(a)) => {
            let p: Vec<usize> = a.split(',').map(|t| t.trim().parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
            match p[..] {
                [v, k] => gen_johnson(v, k),
                _ => Err(bad()),
            }
        }
        ("gnp", Some(a)) => {
            let p: Vec<&str> = a.split(',').map(str::trim).collect();
            if p.len() != 3 {
                return Err(bad());
            }
            let n = p[0].parse().map_err(|_| bad())?;
            let prob = p[1].parse().map_err(|_| bad())?;
            let seed = p[2].parse().map_err(|_| bad())?;
            gen_gnp(n, prob, seed)
        }
        ("lcf", Some(a)) => {
            let p: Vec<&str> = a.split(';').map(str::trim).collect();
            if p.len() != 2 {
                return Err(bad());
            }
            let repeats = p[0].parse().map_err(|_| bad())?;
            let jumps: Vec<i64> =
                p[1].split(',').map(|t| t.trim().parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
            gen_lcf(&jumps, repeats)
        }
        (name, None) => named_lcf(name),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Intersection array `{b_0..; c_1..}` from BFS layers, or None when
    /// the graph is not distance-regular.
    fn intersection_array(g: &Graph) -> Option<(Vec<usize>, Vec<usize>)> {
        let adj: Vec<Vec<usize>> = g.neighbors().into_iter().map(|l| l.into_iter().map(|(v, _)| v).collect()).collect();
        let mut reference: Option<(Vec<usize>, Vec<usize>)> = None;
        for s in 0..g.n() {
            let mut dist = vec![usize::MAX; g.n()];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            let diam = *dist.iter().max().unwrap();
            let mut b = vec![None; diam + 1];
            let mut c = vec![None; diam + 1];
            for u in 0..g.n() {
                let d = dist[u];
                let up = adj[u].iter().filter(|&&w| dist[w] + 1 == d).count();
                let down = adj[u].iter().filter(|&&w| dist[w] == d + 1).count();
                for (slot, val) in [(&mut c[d], up), (&mut b[d], down)] {
                    match slot {
                        None => *slot = Some(val),
                        Some(x) if *x != val => return None,
                        _ => {}
                    }
                }
            }
            let arr = (
                b[..diam].iter().map(|x| x.unwrap()).collect::<Vec<_>>(),
                c[1..].iter().map(|x| x.unwrap()).collect::<Vec<_>>(),
            );
            match &reference {
                None => reference = Some(arr),
                Some(r) if *r != arr => return None,
                _ => {}
            }
        }
        reference
    }

    #[test]
    fn pappus() {
        let g = gen_lcf(&[5, 7, -7, 7, -7, -5], 3).unwrap();
        assert_eq!((g.n(), g.num_edges()), (18, 27));
        assert!(g.is_regular(3));
        assert_eq!(intersection_array(&g), Some((vec![3, 2, 2, 1], vec![1, 1, 2, 3])));
        assert_eq!(generate("pappus").unwrap(), g);
    }

    #[test]
    fn desargues() {
        let g = gen_lcf(&[5, -5, 9, -9], 5).unwrap();
        assert_eq!((g.n(), g.num_edges()), (20, 30));
        assert_eq!(intersection_array(&g), Some((vec![3, 2, 2, 1, 1], vec![1, 1, 2, 2, 3])));
        assert_eq!(generate("desargues").unwrap(), g);
    }

    #[test]
    fn biggs_smith() {
        let g = generate("biggs-smith").unwrap();
        assert_eq!((g.n(), g.num_edges()), (102, 153));
        assert_eq!(
            intersection_array(&g),
            Some((vec![3, 2, 2, 2, 1, 1, 1], vec![1, 1, 1, 1, 1, 1, 3]))
        );
    }

    #[test]
    fn lcf_rejects_parallel_chords() {
        // [2]^4 is K4
        assert_eq!(gen_lcf(&[2], 4).unwrap().num_edges(), 6);
        assert!(gen_lcf(&[3], 4).is_err());
        assert!(gen_lcf(&[1], 6).is_err());
        assert!(gen_lcf(&[3], 3).is_err());
        // consistent-looking but non-involutive code gives degree != 3
        assert!(gen_lcf(&[3, 2], 3).is_err());
    }

    #[test]
    fn johnson() {
        let g = gen_johnson(7, 2).unwrap();
        assert_eq!((g.n(), g.num_edges()), (21, 105));
        assert!(g.is_regular(10));
        let k3 = gen_johnson(3, 1).unwrap();
        assert_eq!(k3, Graph::unweighted(3, [(0, 1), (0, 2), (1, 2)]).unwrap());
        let oct = gen_johnson(4, 2).unwrap();
        assert_eq!((oct.n(), oct.num_edges()), (6, 12));
        assert!(oct.is_regular(4));
        assert!(gen_johnson(3, 3).is_err());
        assert!(gen_johnson(3, 0).is_err());
        assert_eq!(generate("johnson:7,2").unwrap(), g);
    }

    #[test]
    fn gnp() {
        assert_eq!(gen_gnp(5, 0.0, 9).unwrap().num_edges(), 0);
        assert_eq!(gen_gnp(5, 1.0, 9).unwrap().num_edges(), 10);
        assert_eq!(gen_gnp(30, 0.3, 42).unwrap(), gen_gnp(30, 0.3, 42).unwrap());
        assert_ne!(gen_gnp(30, 0.3, 42).unwrap(), gen_gnp(30, 0.3, 43).unwrap());
        assert_eq!(generate("gnp:30,0.3,42").unwrap(), gen_gnp(30, 0.3, 42).unwrap());
        assert!(gen_gnp(5, 1.5, 0).is_err());
    }

    #[test]
    fn registry_errors() {
        assert!(matches!(generate("petersen"), Err(Error::UnknownGenerator(_))));
        assert!(generate("johnson:7").is_err());
        assert!(generate("gnp:5,0.5").is_err());
        assert_eq!(generate("lcf:3;5,7,-7,7,-7,-5").unwrap(), generate("pappus").unwrap());
    }
}
