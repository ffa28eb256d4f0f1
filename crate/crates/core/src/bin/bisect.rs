use std::path::PathBuf;
use std::process::ExitCode;

use bisection_bounds::model::RelaxationKind;
use bisection_bounds::pipeline::{run_compare, run_solve, InstanceSource, RunConfig, UpperBoundMethod};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bisect", version, about = "Lower and upper bounds for minimum graph bisection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one relaxation, optionally with cutting planes.
    Solve(SolveArgs),
    /// Solve several relaxations on the same instance and check their order.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    /// Instance file: header `n |E| m1 m2`, then one `u v [w]` per edge, 1-based.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    instance: Option<PathBuf>,
    /// Generator: pappus, desargues, biggs-smith, johnson:v,k, gnp:n,p,seed, lcf:r;j1,j2,...
    #[arg(long)]
    generate: Option<String>,
    /// Part sizes `m1,m2`.
    #[arg(long, value_parser = parse_pair)]
    m: Option<(usize, usize)>,
    /// Relative solver tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Ub::Tabu)]
    ub: Ub,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Out::Json)]
    out: Out,
    /// Repeat for more solver output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_kind, default_value = "new")]
    relaxation: RelaxationKind,
    /// Tighten with triangle cuts (relaxation `new` only).
    #[arg(long)]
    cuts: bool,
    #[arg(long, default_value_t = 20)]
    max_rounds: usize,
    /// Defaults to 2n.
    #[arg(long)]
    cuts_per_round: Option<usize>,
    /// Minimum violation of a separated cut.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of basic,new,new-bare,wz; all by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    relaxations: Vec<RelaxationKind>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ub {
    Tabu,
    Brute,
    None,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Out {
    Json,
    Csv,
}

fn parse_kind(s: &str) -> Result<RelaxationKind, String> {
    s.parse::<RelaxationKind>().map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected `m1,m2`")?;
    let a = a.trim().parse().map_err(|_| format!("bad m1 `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad m2 `{b}`"))?;
    Ok((a, b))
}

fn config(c: &Common) -> RunConfig {
    let source = match (&c.instance, &c.generate) {
        (Some(p), _) => InstanceSource::File(p.clone()),
        (None, Some(g)) => InstanceSource::Generate(g.clone()),
        (None, None) => unreachable!("clap requires one source"),
    };
    RunConfig {
        m: c.m,
        tol: c.tol,
        ub: match c.ub {
            Ub::Tabu => UpperBoundMethod::Tabu,
            Ub::Brute => UpperBoundMethod::Brute,
            Ub::None => UpperBoundMethod::None,
        },
        seed: c.seed,
        verbosity: c.verbose,
        ..RunConfig::new(source)
    }
}

fn run(cli: Cli) -> bisection_bounds::Result<bool> {
    match cli.command {
        Command::Solve(a) => {
            let cfg = RunConfig {
                relaxations: vec![a.relaxation],
                cuts: a.cuts,
                max_rounds: a.max_rounds,
                cuts_per_round: a.cuts_per_round,
                eps: a.eps,
                ..config(&a.common)
            };
            let rep = run_solve(&cfg)?;
            match a.common.out {
                Out::Json => println!("{}", rep.to_json()?),
                Out::Csv => print!("{}", rep.to_csv()?),
            }
            Ok(rep.all_optimal())
        }
        Command::Compare(a) => {
            let cfg = RunConfig { relaxations: a.relaxations, ..config(&a.common) };
            let rep = run_compare(&cfg)?;
            match a.common.out {
                Out::Json => println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes")),
                Out::Csv => print!("{}", rep.report.to_csv()?),
            }
            for c in &rep.checks {
                eprintln!("{}: {} ({} vs {})", c.name, if c.pass { "ok" } else { "FAILED" }, c.lhs, c.rhs);
            }
            Ok(rep.report.all_optimal() && rep.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bisect: a solve did not reach optimality or a check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("bisect: {e}");
            ExitCode::FAILURE
        }
    }
}
