//! Cutting-plane loop: solve the order-n relaxation, separate the most
//! violated triangle inequalities, append them, re-solve.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cuts::{append_cuts_in_place, separate, CutPool};
use crate::error::Result;
use crate::graph::BisectionInstance;
use crate::model::build_new;
use crate::solver::{safe_lower_bound, solve, SolveStatus, SolverConfig};

/// Slack subtracted before rounding a bound up on integral instances.
pub const INTEGRALITY_SLACK: f64 = 1e-6;

/// `ceil(value - 1e-6)`.
pub fn ceil_bound(value: f64) -> f64 {
    (value - INTEGRALITY_SLACK).ceil()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub max_rounds: usize,
    /// Cuts added per round; `None` means `2n`.
    pub cuts_per_round: Option<usize>,
    pub eps: f64,
    /// Relative improvement below which a round counts as stalled.
    pub stall_tol: f64,
    /// Pool cap; `None` means `40n`.
    pub pool_cap: Option<usize>,
    pub solver: SolverConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_rounds: 20,
            cuts_per_round: None,
            eps: 1e-6,
            stall_tol: 1e-5,
            pool_cap: None,
            solver: SolverConfig::default(),
        }
    }
}

/// One solve of the loop. Round 0 has no cuts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub objective_primal: f64,
    pub objective_dual: f64,
    pub safe_bound: f64,
    pub cuts_added: usize,
    pub total_cuts: usize,
    pub status: SolveStatus,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    NoViolatedCuts,
    MaxRounds,
    Stalled,
    PoolFull,
    SolverFailure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopReport {
    pub rounds: Vec<RoundRecord>,
    /// Best safe bound over all rounds.
    pub certified_bound: f64,
    /// `ceil(certified - 1e-6)` when the weights are integral.
    pub ceiled_bound: Option<f64>,
    pub stop_reason: StopReason,
    #[serde(skip)]
    pub final_primal: Option<DMatrix<f64>>,
    #[serde(skip)]
    pub pool: CutPool,
}

impl LoopReport {
    /// Safe bound of round 0, before any cuts.
    pub fn initial_bound(&self) -> f64 {
        self.rounds[0].safe_bound
    }
}

pub fn cutting_plane_loop(inst: &BisectionInstance, cfg: &LoopConfig) -> Result<LoopReport> {
    let n = inst.n();
    let per_round = cfg.cuts_per_round.unwrap_or(2 * n);
    let mut pool = CutPool::new(cfg.pool_cap.unwrap_or(40 * n));
    let mut problem = build_new(inst, true);
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut stalled = 0;
    let mut added_last = 0;
    let (stop_reason, final_primal) = loop {
        let round = rounds.len();
        let t = Instant::now();
        let sol = solve(&problem, &cfg.solver)?;
        let safe = safe_lower_bound(&problem, &sol)?;
        rounds.push(RoundRecord {
            round,
            objective_primal: sol.objective_primal,
            objective_dual: sol.objective_dual,
            safe_bound: safe.value,
            cuts_added: added_last,
            total_cuts: pool.len(),
            status: sol.status,
            iterations: sol.iterations,
            seconds: t.elapsed().as_secs_f64(),
        });
        if cfg.solver.verbosity > 0 {
            eprintln!(
                "round {round:2}: safe bound {:.8} ({:?}, {} its, {} cuts)",
                safe.value,
                sol.status,
                sol.iterations,
                pool.len()
            );
        }
        let previous = best;
        if safe.value.is_finite() {
            best = best.max(safe.value);
        }
        if sol.status != SolveStatus::Optimal {
            break (StopReason::SolverFailure, sol.primal);
        }
        if round > 0 {
            if best - previous < cfg.stall_tol * (1.0 + best.abs()) {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if stalled >= 2 {
                break (StopReason::Stalled, sol.primal);
            }
        }
        if round >= cfg.max_rounds {
            break (StopReason::MaxRounds, sol.primal);
        }
        if pool.is_full() {
            break (StopReason::PoolFull, sol.primal);
        }

        let fresh: Vec<_> = separate(&sol.primal, usize::MAX, cfg.eps)
            .into_iter()
            .filter(|c| !pool.contains(c))
            .take(per_round)
            .collect();
        let mut accepted = Vec::with_capacity(fresh.len());
        for c in fresh {
            if pool.insert(c, round + 1) {
                accepted.push(c);
            }
        }
        if accepted.is_empty() {
            break (StopReason::NoViolatedCuts, sol.primal);
        }
        added_last = append_cuts_in_place(&mut problem, &accepted)?;
    };

    let ceiled_bound = inst.graph().integral_weights().then(|| ceil_bound(best));
    Ok(LoopReport { rounds, certified_bound: best, ceiled_bound, stop_reason, final_primal: Some(final_primal), pool })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_instance, Graph};

    #[test]
    fn ceiling_uses_slack() {
        assert_eq!(ceil_bound(6.0000003), 6.0);
        assert_eq!(ceil_bound(5.9999999), 6.0);
        assert_eq!(ceil_bound(6.01), 7.0);
    }

    #[test]
    fn star_bound_is_valid() {
        let inst = parse_instance("4 3 3 1\n1 2\n2 3\n2 4\n").unwrap();
        let rep = cutting_plane_loop(&inst, &LoopConfig::default()).unwrap();
        assert!(rep.certified_bound <= 1.0 + 1e-9);
        assert!(rep.certified_bound >= 0.0);
        assert_eq!(rep.ceiled_bound, Some(1.0));
    }

    #[test]
    fn empty_graph_bound_is_zero() {
        let inst = BisectionInstance::new(Graph::unweighted(6, []).unwrap(), 4, 2).unwrap();
        let rep = cutting_plane_loop(&inst, &LoopConfig::default()).unwrap();
        assert!(rep.certified_bound.abs() < 1e-6);
        assert_eq!(rep.ceiled_bound, Some(0.0));
        assert!(rep.rounds.len() <= 21);
    }
}
