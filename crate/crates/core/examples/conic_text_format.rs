//! Writes a relaxation in the text format, reads it back and solves the copy.

use bisection_bounds::graph::parse_instance;
use bisection_bounds::model::{build_new, ConicProblem};
use bisection_bounds::solver::{solve, SolverConfig};

fn main() -> bisection_bounds::Result<()> {
    let inst = parse_instance(include_str!("../data/star.txt"))?;
    let text = build_new(&inst, false).to_text();
    print!("{text}");
    let p = ConicProblem::from_text(&text)?;
    let sol = solve(&p, &SolverConfig::default())?;
    println!("# {:?} after {} iterations, objective {:.9}", sol.status, sol.iterations, sol.objective_primal);
    Ok(())
}
