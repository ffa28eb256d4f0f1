mod common;

use bisection_bounds::cuts::{append_cuts, separate};
use bisection_bounds::cutting_plane::{cutting_plane_loop, LoopConfig};
use bisection_bounds::equivalence::{
    basic_report, check_property8, feasibility_report, lift_new_to_wz, project_wz_to_basic, project_wz_to_new,
};
use bisection_bounds::generators::generate;
use bisection_bounds::graph::{laplacian, BisectionInstance};
use bisection_bounds::model::{build, build_new, build_wz, ConicProblem, RelaxationKind, SparseSym};
use bisection_bounds::solver::{safe_lower_bound, solve, SolveStatus, SolverConfig};
use bisection_bounds::Error;

const TOL: f64 = 1e-7;

fn solved(kind: RelaxationKind, inst: &BisectionInstance) -> (ConicProblem, bisection_bounds::solver::ConicSolution) {
    let p = build(kind, inst);
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal, "{kind}");
    (p, sol)
}

#[test]
fn solved_wz_point_maps_to_the_order_n_models() {
    let mut rng = common::rng(7);
    for _ in 0..3 {
        let inst = common::random_instance(&mut rng, 6..=6, &[0.5]);
        let (p, sol) = solved(RelaxationKind::Wz, &inst);
        // residuals of an optimal point are bounded by the relative tolerance
        let budget = 10.0 * TOL * (1.0 + inst.m1().pow(2) as f64);
        let prop8 = check_property8(&inst, &sol.primal, budget).unwrap();
        assert!(prop8.pass, "{prop8:?}");

        let x = project_wz_to_new(&inst, &sol.primal, budget).unwrap();
        let rep = feasibility_report(&build_new(&inst, true), &x, budget).unwrap();
        assert!(rep.pass, "{rep:?}");
        let l = laplacian(inst.graph());
        assert!(common::rel_close((&l * &x).trace(), p.objective_value(&sol.primal), 1e-9));

        let xb = project_wz_to_basic(&inst, &sol.primal, budget).unwrap();
        let rep = basic_report(&inst, &xb, budget).unwrap();
        assert!(rep.pass, "{rep:?}");
        let basic_obj = build(RelaxationKind::Basic, &inst).objective_value(&xb.map(|v| 2.0 * v - 1.0));
        assert!(common::rel_close(basic_obj, p.objective_value(&sol.primal), 1e-9));
    }
}

#[test]
fn lifted_new_optimum_is_feasible_for_wz() {
    let mut rng = common::rng(8);
    let inst = common::random_instance(&mut rng, 8..=8, &[0.5]);
    let (p, sol) = solved(RelaxationKind::New, &inst);
    let budget = 10.0 * TOL * (1.0 + inst.m1().pow(2) as f64);
    let y = lift_new_to_wz(&inst, &sol.primal, budget).unwrap();
    let wz = build_wz(&inst);
    let rep = feasibility_report(&wz, &y, budget).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(common::rel_close(wz.objective_value(&y), p.objective_value(&sol.primal), 1e-12));
    assert!(check_property8(&inst, &y, budget).unwrap().pass);
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let mut p = ConicProblem::new(3, RelaxationKind::NewBare, SparseSym::new(), 0.0).unwrap();
    p.add_equality("a", SparseSym::from_entries(vec![(0, 0, 1.0)]), 1.0).unwrap();
    p.add_equality("b", SparseSym::from_entries(vec![(0, 0, 2.0)]), 3.0).unwrap();
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(!sol.is_optimal());
}

#[test]
fn inequality_fixed_by_equalities_can_be_infeasible() {
    let mut p = ConicProblem::new(3, RelaxationKind::NewBare, SparseSym::new(), 0.0).unwrap();
    p.add_equality("a", SparseSym::from_entries(vec![(0, 0, 1.0)]), 1.0).unwrap();
    p.add_inequality("b", SparseSym::from_entries(vec![(0, 0, 2.0)]), 1.5).unwrap();
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn redundant_inequality_copies_leave_the_bound_alone() {
    let mut rng = common::rng(10);
    let inst = common::random_instance(&mut rng, 7..=7, &[0.5]);
    let (p, sol) = solved(RelaxationKind::New, &inst);
    let mut q = p.clone();
    let trace = p.equalities().iter().find(|c| c.label == "trace").unwrap().clone();
    for (k, con) in p.inequalities().iter().take(12).enumerate() {
        let scaled: Vec<_> = con.coef.entries().iter().map(|&(i, j, v)| (i, j, 3.0 * v)).collect();
        q.add_inequality(format!("scaled{k}"), SparseSym::from_entries(scaled.clone()), 3.0 * con.rhs).unwrap();
        q.add_inequality(format!("loose{k}"), SparseSym::from_entries(scaled), 3.0 * con.rhs + 0.5).unwrap();
        // same row shifted by an equality: identical on the feasible set
        let mut shifted = con.coef.entries().to_vec();
        shifted.extend_from_slice(trace.coef.entries());
        q.add_inequality(format!("shifted{k}"), SparseSym::from_entries(shifted), con.rhs + trace.rhs).unwrap();
    }
    let got = solve(&q, &SolverConfig::default()).unwrap();
    assert_eq!(got.status, SolveStatus::Optimal);
    assert_eq!(got.dual_ineq.len(), q.inequalities().len());
    // only rows forced to equality may carry a negative multiplier
    for (u, con) in got.dual_ineq.iter().zip(q.inequalities()) {
        assert!(*u >= 0.0 || q.is_tight(&con.label), "{}", con.label);
    }
    let (a, b) = (safe_lower_bound(&p, &sol).unwrap().value, safe_lower_bound(&q, &got).unwrap().value);
    assert!(common::rel_close(a, b, 1e-6), "{a} vs {b}");
}

#[test]
fn solver_rejects_oversized_blocks() {
    let inst = BisectionInstance::new(generate("gnp:20,0.2,3").unwrap(), 10, 10).unwrap();
    let cfg = SolverConfig { max_block_order: 30, ..SolverConfig::default() };
    assert!(matches!(solve(&build_wz(&inst), &cfg), Err(Error::TooLarge { .. })));
    assert!(SolverConfig::with_tolerance(0.0).validate().is_err());
}

#[test]
fn solves_are_deterministic_and_weakly_dual() {
    let mut rng = common::rng(9);
    let inst = common::random_instance(&mut rng, 10..=10, &[0.4]);
    for kind in RelaxationKind::ALL {
        let (p, a) = solved(kind, &inst);
        let (_, b) = solved(kind, &inst);
        assert_eq!(a.primal, b.primal, "{kind}");
        assert_eq!(a.objective_dual, b.objective_dual, "{kind}");
        let safe = safe_lower_bound(&p, &a).unwrap();
        // the certified bound never exceeds the primal objective
        assert!(safe.value <= a.objective_primal + 1e-6 * (1.0 + a.objective_primal.abs()), "{kind}");
        assert!(common::rel_close(safe.value, a.objective_primal, 1e-5), "{kind}");
    }
}

#[test]
fn safe_bound_needs_a_fixed_trace() {
    let inst = BisectionInstance::new(generate("gnp:6,0.5,2").unwrap(), 4, 2).unwrap();
    let (p, sol) = solved(RelaxationKind::New, &inst);
    let text = p.to_text().lines().filter(|l| !l.starts_with("@trace")).collect::<Vec<_>>().join("\n");
    let q = ConicProblem::from_text(&text).unwrap();
    assert!(q.fixed_trace().is_none());
    assert!(matches!(safe_lower_bound(&q, &sol), Err(Error::UnsupportedProblem(_))));
}

#[test]
fn cut_rounds_do_not_lower_the_bound() {
    let mut rng = common::rng(10);
    for _ in 0..3 {
        let inst = common::random_instance(&mut rng, 10..=14, &[0.3, 0.5]);
        let rep = cutting_plane_loop(&inst, &LoopConfig::default()).unwrap();
        assert!(rep.rounds.len() <= 21);
        for w in rep.rounds.windows(2) {
            assert!(w[1].safe_bound >= w[0].safe_bound - 2e-7 * (1.0 + w[0].safe_bound.abs()), "{:?}", rep.rounds);
        }
        let again = cutting_plane_loop(&inst, &LoopConfig::default()).unwrap();
        assert_eq!(again.certified_bound, rep.certified_bound);
        assert_eq!(again.stop_reason, rep.stop_reason);
    }
}

#[test]
fn no_violated_cuts_after_saturation() {
    let inst = BisectionInstance::new(generate("pappus").unwrap(), 10, 8).unwrap();
    let rep = cutting_plane_loop(&inst, &LoopConfig::default()).unwrap();
    let x = rep.final_primal.unwrap();
    let left: Vec<_> = separate(&x, usize::MAX, 1e-6).into_iter().filter(|c| !rep.pool.contains(c)).collect();
    assert!(left.is_empty());
    let p = append_cuts(&build_new(&inst, true), &rep.pool.iter().map(|(c, _)| *c).collect::<Vec<_>>()).unwrap();
    assert_eq!(p.inequalities().len(), build_new(&inst, true).inequalities().len() + rep.pool.len());
}
