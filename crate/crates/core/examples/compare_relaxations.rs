//! All four relaxations on one random graph, with their certified bounds.

use bisection_bounds::generators::gen_gnp;
use bisection_bounds::graph::BisectionInstance;
use bisection_bounds::heuristic::brute_force;
use bisection_bounds::model::{build, RelaxationKind};
use bisection_bounds::solver::{safe_lower_bound, solve, SolverConfig};

fn main() -> bisection_bounds::Result<()> {
    let inst = BisectionInstance::new(gen_gnp(10, 0.5, 42)?, 6, 4)?;
    let cfg = SolverConfig::default();
    println!("{:<9} {:>6} {:>12} {:>12} {:>12} {:>4}", "model", "order", "primal", "dual", "safe", "its");
    for kind in RelaxationKind::ALL {
        let p = build(kind, &inst);
        let sol = solve(&p, &cfg)?;
        let safe = safe_lower_bound(&p, &sol)?;
        println!(
            "{:<9} {:>6} {:>12.7} {:>12.7} {:>12.7} {:>4}",
            kind.name(),
            p.block_order(),
            sol.objective_primal,
            sol.objective_dual,
            safe.value,
            sol.iterations
        );
    }
    println!("exact minimum: {}", brute_force(&inst)?.1);
    Ok(())
}
