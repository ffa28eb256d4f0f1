//! Lifts the order-n optimum to the bordered model and projects back.

use bisection_bounds::equivalence::{check_property8, feasibility_report, lift_new_to_wz, project_wz_to_new};
use bisection_bounds::generators::gen_gnp;
use bisection_bounds::graph::BisectionInstance;
use bisection_bounds::model::{build_new, build_wz};
use bisection_bounds::solver::{solve, SolverConfig};

fn main() -> bisection_bounds::Result<()> {
    let inst = BisectionInstance::new(gen_gnp(8, 0.5, 1)?, 5, 3)?;
    let p = build_new(&inst, true);
    let sol = solve(&p, &SolverConfig::default())?;
    let tol = 1e-5;

    let y = lift_new_to_wz(&inst, &sol.primal, tol)?;
    let wz = build_wz(&inst);
    let rep = feasibility_report(&wz, &y, tol)?;
    println!("order-n objective   {:.9}", p.objective_value(&sol.primal));
    println!("lifted objective    {:.9}", wz.objective_value(&y));
    println!("lifted residuals    {:.2e} (lambda_min {:.2e})", rep.max_residual(), rep.lambda_min);
    for (family, r) in &check_property8(&inst, &y, tol)?.families {
        println!("  {family:<9} {r:.2e}");
    }
    let back = project_wz_to_new(&inst, &y, tol)?;
    println!("round trip exact    {}", back == sol.primal);
    Ok(())
}
