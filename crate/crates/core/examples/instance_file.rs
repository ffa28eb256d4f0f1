//! Reads an instance file and reports the order-n bound and the exact cut.
//!
//! `cargo run --example instance_file -- path/to/graph.txt`

use bisection_bounds::cutting_plane::ceil_bound;
use bisection_bounds::graph::{parse_instance, write_instance};
use bisection_bounds::heuristic::brute_force;
use bisection_bounds::pipeline::solve_relaxation;
use bisection_bounds::model::RelaxationKind;
use bisection_bounds::solver::SolverConfig;

fn main() -> bisection_bounds::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => include_str!("../data/star.txt").to_string(),
    };
    let inst = parse_instance(&text)?;
    print!("{}", write_instance(&inst));
    let r = solve_relaxation(&inst, RelaxationKind::New, &SolverConfig::default())?;
    println!("bound {:.7} (rounded {})", r.safe_bound, ceil_bound(r.safe_bound));
    if inst.n() <= 24 {
        let (a, cut) = brute_force(&inst)?;
        println!("optimum {cut} with part 1 = {:?}", a.first_part().iter().map(|v| v + 1).collect::<Vec<_>>());
    }
    Ok(())
}
