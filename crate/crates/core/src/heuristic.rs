//! Upper bounds: tabu search over part-preserving swaps, and exhaustive
//! enumeration for small instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cut_value, Assignment, BisectionInstance};

/// Largest `n` accepted by [`brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabuConfig {
    pub max_iters: usize,
    pub tenure: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl TabuConfig {
    /// `2000 n` iterations, tenure `round(0.1 n)` clamped to `[5, 50]`,
    /// 10 restarts.
    pub fn for_size(n: usize, seed: u64) -> Self {
        let tenure = ((0.1 * n as f64).round() as usize).clamp(5, 50);
        Self { max_iters: 2000 * n, tenure, restarts: 10, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.tenure == 0 || self.restarts == 0 {
            return Err(Error::Config("tabu parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Current bisection with per-vertex gains `D[v] = ext(v) - int(v)`.
#[derive(Debug, Clone)]
pub struct SwapState {
    weight: Vec<f64>,
    n: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
    in_first: Vec<bool>,
    gain: Vec<f64>,
    cut: f64,
}

impl SwapState {
    pub fn new(inst: &BisectionInstance, a: &Assignment) -> Result<Self> {
        a.validate(inst)?;
        let g = inst.graph();
        let n = g.n();
        let mut weight = vec![0.0; n * n];
        for e in g.edges() {
            weight[e.u * n + e.v] += e.w;
            weight[e.v * n + e.u] += e.w;
        }
        let neighbors = g.neighbors();
        let in_first = a.in_first().to_vec();
        let gain = (0..n)
            .map(|v| {
                neighbors[v]
                    .iter()
                    .map(|&(u, w)| if in_first[u] == in_first[v] { -w } else { w })
                    .sum()
            })
            .collect();
        let cut = cut_value(g, a)?;
        Ok(Self { weight, n, neighbors, in_first, gain, cut })
    }

    pub fn cut(&self) -> f64 {
        self.cut
    }

    pub fn in_first(&self, v: usize) -> bool {
        self.in_first[v]
    }

    /// Change in cut when exchanging `a` (part 1) with `b` (part 2).
    pub fn swap_delta(&self, a: usize, b: usize) -> f64 {
        2.0 * self.weight[a * self.n + b] - self.gain[a] - self.gain[b]
    }

    fn flip(&mut self, x: usize) {
        let side = self.in_first[x];
        for &(v, w) in &self.neighbors[x] {
            if self.in_first[v] == side {
                self.gain[v] += 2.0 * w;
            } else {
                self.gain[v] -= 2.0 * w;
            }
        }
        self.cut -= self.gain[x];
        self.gain[x] = -self.gain[x];
        self.in_first[x] = !side;
    }

    /// Exchanges `a` (part 1) and `b` (part 2) in `O(deg a + deg b)`.
    pub fn apply_swap(&mut self, a: usize, b: usize) {
        debug_assert!(self.in_first[a] && !self.in_first[b]);
        self.flip(a);
        self.flip(b);
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::from_parts(self.in_first.clone())
    }
}

fn random_assignment(inst: &BisectionInstance, rng: &mut ChaCha8Rng) -> Assignment {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.shuffle(rng);
    let mut in_first = vec![false; inst.n()];
    for &v in &order[..inst.m1()] {
        in_first[v] = true;
    }
    Assignment::from_parts(in_first)
}

fn tabu_run(inst: &BisectionInstance, cfg: &TabuConfig, rng: &mut ChaCha8Rng) -> Result<(Assignment, f64)> {
    const TIE: f64 = 1e-12;
    let n = inst.n();
    let mut state = SwapState::new(inst, &random_assignment(inst, rng))?;
    let mut best = (state.assignment(), state.cut());
    let mut tabu_until = vec![0usize; n];
    let mut firsts: Vec<usize> = Vec::with_capacity(inst.m1());
    let mut seconds: Vec<usize> = Vec::with_capacity(inst.m2());

    for iter in 1..=cfg.max_iters {
        firsts.clear();
        seconds.clear();
        for v in 0..n {
            if state.in_first(v) {
                firsts.push(v);
            } else {
                seconds.push(v);
            }
        }
        let mut choice: Option<(usize, usize, f64)> = None;
        let mut ties = 0u32;
        for &a in &firsts {
            for &b in &seconds {
                let delta = state.swap_delta(a, b);
                let is_tabu = tabu_until[a] > iter || tabu_until[b] > iter;
                if is_tabu && state.cut() + delta >= best.1 - TIE {
                    continue;
                }
                match choice {
                    Some((_, _, d)) if delta > d + TIE => {}
                    Some((_, _, d)) if delta >= d - TIE => {
                        ties += 1;
                        if rng.gen_range(0..ties) == 0 {
                            choice = Some((a, b, delta));
                        }
                    }
                    _ => {
                        ties = 1;
                        choice = Some((a, b, delta));
                    }
                }
            }
        }
        let Some((a, b, _)) = choice else {
            continue;
        };
        state.apply_swap(a, b);
        tabu_until[a] = iter + cfg.tenure;
        tabu_until[b] = iter + cfg.tenure;
        if state.cut() < best.1 - TIE {
            best = (state.assignment(), state.cut());
        }
    }
    let exact = cut_value(inst.graph(), &best.0)?;
    Ok((best.0, exact))
}

/// Best bisection found over all restarts; ties go to the lowest restart.
pub fn tabu_search(inst: &BisectionInstance, cfg: &TabuConfig) -> Result<(Assignment, f64)> {
    cfg.validate()?;
    let mut best: Option<(Assignment, f64)> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
        let found = tabu_run(inst, cfg, &mut rng)?;
        if best.as_ref().map_or(true, |b| found.1 < b.1) {
            best = Some(found);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Exact minimum over all part-1 sets of size `m1`, first in lexicographic
/// order among ties.
pub fn brute_force(inst: &BisectionInstance) -> Result<(Assignment, f64)> {
    let n = inst.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let k = inst.m1();
    let edges: Vec<(u32, u32, f64)> =
        inst.graph().edges().iter().map(|e| (1u32 << e.u, 1u32 << e.v, e.w)).collect();
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best: Option<(u32, f64)> = None;
    loop {
        let mask = comb.iter().fold(0u32, |m, &v| m | (1 << v));
        let cut: f64 = edges
            .iter()
            .filter(|&&(a, b, _)| (mask & a == 0) != (mask & b == 0))
            .map(|e| e.2)
            .sum();
        if best.map_or(true, |b| cut < b.1) {
            best = Some((mask, cut));
        }
        let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
            break;
        };
        comb[i] += 1;
        for j in i + 1..k {
            comb[j] = comb[j - 1] + 1;
        }
    }
    let (mask, cut) = best.expect("at least one subset");
    let a = Assignment::from_parts((0..n).map(|v| mask & (1 << v) != 0).collect());
    Ok((a, cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_gnp, gen_johnson};
    use crate::graph::{parse_instance, Graph};
    use proptest::prelude::*;

    fn star() -> BisectionInstance {
        parse_instance("4 3 3 1\n1 2\n2 3\n2 4\n").unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let edge = parse_instance("2 1 1 1\n1 2").unwrap();
        assert_eq!(brute_force(&edge).unwrap().1, 1.0);
        let k4 = BisectionInstance::new(gen_johnson(4, 1).unwrap(), 3, 1).unwrap();
        assert_eq!(brute_force(&k4).unwrap().1, 3.0);
        let (a, cut) = brute_force(&star()).unwrap();
        assert_eq!(cut, 1.0);
        // first optimum in lexicographic order keeps {1, 2, 3} (1-based) together
        assert_eq!(a.first_part(), vec![0, 1, 2]);
    }

    #[test]
    fn brute_force_guards_size() {
        let big = BisectionInstance::new(Graph::unweighted(25, []).unwrap(), 13, 12).unwrap();
        assert!(matches!(brute_force(&big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn tabu_matches_star() {
        let inst = star();
        let (a, cut) = tabu_search(&inst, &TabuConfig::for_size(4, 1)).unwrap();
        assert_eq!(cut, 1.0);
        a.validate(&inst).unwrap();
    }

    #[test]
    fn tabu_is_deterministic() {
        let inst = BisectionInstance::new(gen_gnp(14, 0.4, 3).unwrap(), 8, 6).unwrap();
        let cfg = TabuConfig { max_iters: 300, ..TabuConfig::for_size(14, 11) };
        assert_eq!(tabu_search(&inst, &cfg).unwrap(), tabu_search(&inst, &cfg).unwrap());
    }

    #[test]
    fn tabu_config_defaults() {
        let c = TabuConfig::for_size(21, 0);
        assert_eq!((c.max_iters, c.tenure, c.restarts), (42_000, 5, 10));
        assert_eq!(TabuConfig::for_size(102, 0).tenure, 10);
        assert_eq!(TabuConfig::for_size(1000, 0).tenure, 50);
        assert!(TabuConfig { restarts: 0, ..c }.validate().is_err());
    }

    proptest! {
        #[test]
        fn swap_deltas_match_recomputation(seed in 0u64..500, moves in proptest::collection::vec((0usize..100, 0usize..100), 1..30)) {
            let inst = BisectionInstance::new(gen_gnp(11, 0.5, seed).unwrap(), 7, 4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = SwapState::new(&inst, &random_assignment(&inst, &mut rng)).unwrap();
            for (x, y) in moves {
                let a = state.assignment();
                let firsts = a.first_part();
                let seconds: Vec<usize> = (0..11).filter(|v| !a.in_first()[*v]).collect();
                let (u, v) = (firsts[x % firsts.len()], seconds[y % seconds.len()]);
                let predicted = state.cut() + state.swap_delta(u, v);
                state.apply_swap(u, v);
                let exact = cut_value(inst.graph(), &state.assignment()).unwrap();
                prop_assert!((predicted - exact).abs() < 1e-9);
                prop_assert!((state.cut() - exact).abs() < 1e-9);
            }
        }
    }
}
