//! Per-round trace of the cutting-plane loop.
//!
//! `cargo run --release --example cutting_planes -- johnson:7,2 11 10`

use bisection_bounds::cutting_plane::{cutting_plane_loop, LoopConfig};
use bisection_bounds::generators::generate;
use bisection_bounds::graph::BisectionInstance;

fn main() -> bisection_bounds::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec = args.first().map_or("pappus", String::as_str);
    let g = generate(spec)?;
    let n = g.n();
    let m1 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(n - n / 2);
    let inst = BisectionInstance::new(g, m1, n - m1)?;

    let rep = cutting_plane_loop(&inst, &LoopConfig::default())?;
    println!("round  safe bound     cuts  its  seconds");
    for r in &rep.rounds {
        println!("{:>5}  {:>12.7}  {:>5}  {:>3}  {:>7.2}", r.round, r.safe_bound, r.total_cuts, r.iterations, r.seconds);
    }
    println!("stop: {:?}, certified {:.7}, rounded {:?}", rep.stop_reason, rep.certified_bound, rep.ceiled_bound);
    let mut kinds = [0usize; 2];
    for (c, _) in rep.pool.iter() {
        kinds[c.kind as usize] += 1;
    }
    println!("pool: {} type A, {} type B", kinds[0], kinds[1]);
    Ok(())
}
