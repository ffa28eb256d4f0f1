//! Lists the named graphs and a few generated ones.

use bisection_bounds::generators::{generate, named_lcf_codes};

fn main() -> bisection_bounds::Result<()> {
    for code in named_lcf_codes() {
        let g = generate(&code.name)?;
        println!("{:<12} n={:<4} edges={:<4} jumps={}", code.name, g.n(), g.num_edges(), code.jumps.len());
    }
    for spec in ["johnson:7,2", "johnson:6,3", "gnp:30,0.2,7", "lcf:4;5,-5"] {
        let g = generate(spec)?;
        let deg = g.degrees();
        println!(
            "{:<12} n={:<4} edges={:<4} degree {}..{}",
            spec,
            g.n(),
            g.num_edges(),
            deg.iter().min().unwrap(),
            deg.iter().max().unwrap()
        );
    }
    Ok(())
}
