#![allow(dead_code)]

use bisection_bounds::generators::gen_gnp;
use bisection_bounds::graph::{BisectionInstance, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) with `n` in `n_range`, `p` from `probs`, and a random split with
/// `m1 > m2 >= 1`.
pub fn random_instance(rng: &mut ChaCha8Rng, n_range: std::ops::RangeInclusive<usize>, probs: &[f64]) -> BisectionInstance {
    let n = rng.gen_range(n_range);
    let p = probs[rng.gen_range(0..probs.len())];
    let g = gen_gnp(n, p, rng.gen()).unwrap();
    let m2 = rng.gen_range(1..=(n - 1) / 2);
    BisectionInstance::new(g, n - m2, m2).unwrap()
}

/// Random graph with integer weights in `1..=5`.
pub fn random_weighted(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, rng.gen_range(1..=5) as f64));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
