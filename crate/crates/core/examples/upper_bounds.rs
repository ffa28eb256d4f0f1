//! Tabu search against exhaustive enumeration on small random graphs.

use bisection_bounds::generators::gen_gnp;
use bisection_bounds::graph::BisectionInstance;
use bisection_bounds::heuristic::{brute_force, tabu_search, TabuConfig};

fn main() -> bisection_bounds::Result<()> {
    for seed in 0..8 {
        let n = 12 + (seed as usize % 5);
        let inst = BisectionInstance::new(gen_gnp(n, 0.4, seed)?, n - n / 3, n / 3)?;
        let (_, exact) = brute_force(&inst)?;
        let (a, tabu) = tabu_search(&inst, &TabuConfig::for_size(n, seed))?;
        let part: Vec<String> = a.first_part().iter().map(|v| (v + 1).to_string()).collect();
        println!("n={n:2} exact {exact:3} tabu {tabu:3}  part 1: {}", part.join(" "));
    }
    Ok(())
}
