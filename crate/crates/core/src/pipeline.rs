//! End-to-end runs behind the `bisect` binary: load or generate an
//! instance, solve relaxations, optionally tighten with cuts, and compute
//! an upper bound.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cutting_plane::{ceil_bound, cutting_plane_loop, LoopConfig, RoundRecord, StopReason};
use crate::error::{Error, Result};
use crate::generators::generate;
use crate::graph::{parse_instance, BisectionInstance};
use crate::heuristic::{brute_force, tabu_search, TabuConfig};
use crate::model::{build, RelaxationKind};
use crate::solver::{safe_lower_bound, solve, SolveStatus, SolverConfig};

/// Largest `n` accepted by [`run_compare`] when the bordered relaxation is included.
pub const COMPARE_WZ_LIMIT: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceSource {
    File(PathBuf),
    Generate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpperBoundMethod {
    Tabu,
    Brute,
    None,
}

impl FromStr for UpperBoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tabu" => Ok(Self::Tabu),
            "brute" => Ok(Self::Brute),
            "none" => Ok(Self::None),
            _ => Err(Error::Config(format!("unknown upper bound method `{s}`"))),
        }
    }
}

impl fmt::Display for UpperBoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tabu => "tabu",
            Self::Brute => "brute",
            Self::None => "none",
        })
    }
}

/// Everything a run needs; mirrors the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: InstanceSource,
    /// Overrides the part sizes of a file; defaults to the most balanced
    /// split for generated graphs.
    pub m: Option<(usize, usize)>,
    pub relaxations: Vec<RelaxationKind>,
    pub cuts: bool,
    pub max_rounds: usize,
    pub cuts_per_round: Option<usize>,
    pub eps: f64,
    pub tol: f64,
    pub ub: UpperBoundMethod,
    pub seed: u64,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn new(source: InstanceSource) -> Self {
        let lc = LoopConfig::default();
        Self {
            source,
            m: None,
            relaxations: vec![RelaxationKind::New],
            cuts: false,
            max_rounds: lc.max_rounds,
            cuts_per_round: None,
            eps: lc.eps,
            tol: lc.solver.tol_gap,
            ub: UpperBoundMethod::Tabu,
            seed: 0,
            verbosity: 0,
        }
    }

    fn solver(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig { verbosity: self.verbosity, ..SolverConfig::with_tolerance(self.tol) };
        cfg.validate()?;
        Ok(cfg)
    }

    fn loop_config(&self) -> Result<LoopConfig> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps = {} must be a finite nonnegative number", self.eps)));
        }
        if self.cuts_per_round == Some(0) {
            return Err(Error::Config("cuts per round must be positive".into()));
        }
        Ok(LoopConfig {
            max_rounds: self.max_rounds,
            cuts_per_round: self.cuts_per_round,
            eps: self.eps,
            solver: self.solver()?,
            ..LoopConfig::default()
        })
    }
}

/// Loads or generates the instance described by `cfg`.
pub fn load_instance(cfg: &RunConfig) -> Result<(String, BisectionInstance)> {
    match &cfg.source {
        InstanceSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
            })?;
            let inst = parse_instance(&text)?;
            let inst = match cfg.m {
                Some((m1, m2)) => BisectionInstance::new(inst.graph().clone(), m1, m2)?,
                None => inst,
            };
            let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((id, inst))
        }
        InstanceSource::Generate(spec) => {
            let g = generate(spec)?;
            let n = g.n();
            let (m1, m2) = cfg.m.unwrap_or((n - n / 2, n / 2));
            Ok((spec.clone(), BisectionInstance::new(g, m1, m2)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationResult {
    pub relaxation: RelaxationKind,
    pub status: SolveStatus,
    pub objective_primal: f64,
    pub objective_dual: f64,
    pub safe_bound: f64,
    /// Present only for integral weights.
    pub ceiled_bound: Option<f64>,
    pub iterations: usize,
    pub regularization: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub rounds: Vec<RoundRecord>,
    pub certified_bound: f64,
    pub ceiled_bound: Option<f64>,
    pub stop_reason: StopReason,
    pub total_cuts: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub method: UpperBoundMethod,
    pub value: f64,
    /// Part 1, 1-based.
    pub first_part: Vec<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub instance: String,
    pub n: usize,
    pub edges: usize,
    pub m1: usize,
    pub m2: usize,
    pub integral_weights: bool,
    pub relaxations: Vec<RelaxationResult>,
    pub cutting_planes: Option<CutResult>,
    pub upper_bound: Option<UpperBound>,
    pub config: RunConfig,
}

/// CSV columns, in table order.
pub const CSV_HEADER: [&str; 8] = ["instance", "n", "m1", "m2", "basic", "new", "new+cuts", "ub"];

fn fmt_bound(safe: f64, ceiled: Option<f64>) -> String {
    match ceiled {
        Some(c) => format!("{c}"),
        None => format!("{safe:.6}"),
    }
}

impl BoundReport {
    /// False if any solve ended without an optimal status.
    pub fn all_optimal(&self) -> bool {
        self.relaxations.iter().all(|r| r.status == SolveStatus::Optimal)
            && self.cutting_planes.as_ref().map_or(true, |c| c.stop_reason != StopReason::SolverFailure)
    }

    fn relaxation(&self, kind: RelaxationKind) -> Option<&RelaxationResult> {
        self.relaxations.iter().find(|r| r.relaxation == kind)
    }

    /// One row under [`CSV_HEADER`]; bounds are ceiled when the weights are
    /// integral and missing columns are empty.
    pub fn csv_row(&self) -> Vec<String> {
        let col = |kind| self.relaxation(kind).map_or(String::new(), |r| fmt_bound(r.safe_bound, r.ceiled_bound));
        let new = match self.relaxation(RelaxationKind::New) {
            Some(r) => fmt_bound(r.safe_bound, r.ceiled_bound),
            None => self.cutting_planes.as_ref().map_or(String::new(), |c| {
                let r0 = &c.rounds[0];
                fmt_bound(r0.safe_bound, self.integral_weights.then(|| ceil_bound(r0.safe_bound)))
            }),
        };
        vec![
            self.instance.clone(),
            self.n.to_string(),
            self.m1.to_string(),
            self.m2.to_string(),
            col(RelaxationKind::Basic),
            new,
            self.cutting_planes.as_ref().map_or(String::new(), |c| fmt_bound(c.certified_bound, c.ceiled_bound)),
            self.upper_bound.as_ref().map_or(String::new(), |u| format!("{}", u.value)),
        ]
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).and_then(|_| w.write_record(self.csv_row())).map_err(csv_error)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Solves one relaxation and certifies its bound.
pub fn solve_relaxation(inst: &BisectionInstance, kind: RelaxationKind, solver: &SolverConfig) -> Result<RelaxationResult> {
    let t = Instant::now();
    let p = build(kind, inst);
    let sol = solve(&p, solver)?;
    let safe = if sol.status == SolveStatus::Infeasible {
        f64::NEG_INFINITY
    } else {
        safe_lower_bound(&p, &sol)?.value
    };
    let ceiled_bound = (inst.graph().integral_weights() && safe.is_finite()).then(|| ceil_bound(safe));
    Ok(RelaxationResult {
        relaxation: kind,
        status: sol.status,
        objective_primal: sol.objective_primal,
        objective_dual: sol.objective_dual,
        safe_bound: safe,
        ceiled_bound,
        iterations: sol.iterations,
        regularization: sol.regularization,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn upper_bound(inst: &BisectionInstance, cfg: &RunConfig) -> Result<Option<UpperBound>> {
    let t = Instant::now();
    let found = match cfg.ub {
        UpperBoundMethod::None => return Ok(None),
        UpperBoundMethod::Tabu => tabu_search(inst, &TabuConfig::for_size(inst.n(), cfg.seed))?,
        UpperBoundMethod::Brute => brute_force(inst)?,
    };
    Ok(Some(UpperBound {
        method: cfg.ub,
        value: found.1,
        first_part: found.0.first_part().iter().map(|v| v + 1).collect(),
        seconds: t.elapsed().as_secs_f64(),
    }))
}

fn empty_report(id: String, inst: &BisectionInstance, cfg: &RunConfig) -> BoundReport {
    BoundReport {
        instance: id,
        n: inst.n(),
        edges: inst.graph().num_edges(),
        m1: inst.m1(),
        m2: inst.m2(),
        integral_weights: inst.graph().integral_weights(),
        relaxations: Vec::new(),
        cutting_planes: None,
        upper_bound: None,
        config: cfg.clone(),
    }
}

/// Solves the configured relaxations. With `cuts`, the order-n relaxation
/// is tightened by the cutting-plane loop, whose round 0 is the plain
/// relaxation.
pub fn run_solve(cfg: &RunConfig) -> Result<BoundReport> {
    if cfg.relaxations.is_empty() {
        return Err(Error::Config("no relaxation selected".into()));
    }
    if cfg.cuts && cfg.relaxations.iter().any(|&k| k != RelaxationKind::New) {
        return Err(Error::Config("cuts apply to the `new` relaxation only".into()));
    }
    let solver = cfg.solver()?;
    let loop_cfg = cfg.loop_config()?;
    let (id, inst) = load_instance(cfg)?;
    let mut report = empty_report(id, &inst, cfg);

    if cfg.cuts {
        let t = Instant::now();
        let rep = cutting_plane_loop(&inst, &loop_cfg)?;
        report.cutting_planes = Some(CutResult {
            total_cuts: rep.pool.len(),
            certified_bound: rep.certified_bound,
            ceiled_bound: rep.ceiled_bound,
            stop_reason: rep.stop_reason,
            rounds: rep.rounds,
            seconds: t.elapsed().as_secs_f64(),
        });
    } else {
        for &kind in &cfg.relaxations {
            report.relaxations.push(solve_relaxation(&inst, kind, &solver)?);
        }
    }
    report.upper_bound = upper_bound(&inst, cfg)?;
    Ok(report)
}

/// An assertion between two solved relaxations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub report: BoundReport,
    pub checks: Vec<Check>,
}

impl CompareReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Solves each requested relaxation and checks `basic <= new`,
/// `new-bare <= new` and `new == wz` where both sides are present.
pub fn run_compare(cfg: &RunConfig) -> Result<CompareReport> {
    let mut cfg = cfg.clone();
    cfg.cuts = false;
    if cfg.relaxations.is_empty() {
        cfg.relaxations = RelaxationKind::ALL.to_vec();
    }
    let (_, inst) = load_instance(&cfg)?;
    if cfg.relaxations.contains(&RelaxationKind::Wz) && inst.n() > COMPARE_WZ_LIMIT {
        return Err(Error::TooLarge { n: inst.n(), limit: COMPARE_WZ_LIMIT });
    }
    let report = run_solve(&cfg)?;
    let bound = |k| report.relaxation(k).map(|r| r.safe_bound);
    let mut checks = Vec::new();
    let new = bound(RelaxationKind::New);
    if let (Some(b), Some(n)) = (bound(RelaxationKind::Basic), new) {
        let tol = 1e-6 * (1.0 + n.abs());
        checks.push(Check { name: "basic <= new".into(), lhs: b, rhs: n, tol, pass: b <= n + tol });
    }
    if let (Some(b), Some(n)) = (bound(RelaxationKind::NewBare), new) {
        let tol = 1e-6 * (1.0 + n.abs());
        checks.push(Check { name: "new-bare <= new".into(), lhs: b, rhs: n, tol, pass: b <= n + tol });
    }
    if let (Some(n), Some(w)) = (new, bound(RelaxationKind::Wz)) {
        let tol = 1e-5 * (1.0 + n.abs());
        checks.push(Check { name: "new == wz".into(), lhs: n, rhs: w, tol, pass: (n - w).abs() <= tol });
    }
    Ok(CompareReport { report, checks })
}
