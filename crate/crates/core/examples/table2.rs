//! Lower bounds before and after triangle cuts, plus a tabu upper bound, on
//! the generated graphs. Pass `biggs-smith` to include the 102-vertex graph.

use std::time::Instant;

use bisection_bounds::cutting_plane::{ceil_bound, cutting_plane_loop, LoopConfig};
use bisection_bounds::generators::generate;
use bisection_bounds::graph::BisectionInstance;
use bisection_bounds::heuristic::{tabu_search, TabuConfig};

fn main() -> bisection_bounds::Result<()> {
    let mut rows = vec![("pappus", 10, 8), ("desargues", 15, 5), ("johnson:7,2", 11, 10)];
    if std::env::args().any(|a| a == "biggs-smith") {
        rows.push(("biggs-smith", 70, 32));
    }
    println!("{:<12} {:>4} {:>8} {:>6} {:>10} {:>4} {:>8}", "graph", "n", "m", "new", "new+cuts", "ub", "seconds");
    for (name, m1, m2) in rows {
        let inst = BisectionInstance::new(generate(name)?, m1, m2)?;
        let t = Instant::now();
        let rep = cutting_plane_loop(&inst, &LoopConfig::default())?;
        let (_, ub) = tabu_search(&inst, &TabuConfig::for_size(inst.n(), 1))?;
        println!(
            "{:<12} {:>4} {:>8} {:>6} {:>10} {:>4} {:>8.1}",
            name,
            inst.n(),
            format!("{m1},{m2}"),
            ceil_bound(rep.initial_bound()),
            ceil_bound(rep.certified_bound),
            ub,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
