//! Privacy accountant tables at n = 100, α* = 1/(4n), δ = 1e-6.

use polyveil::cli::emit_table;
use polyveil::dp::{dp_table, Framework, TableSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = vec![2, 5, 9, 20, 50, 100, 1000];
    for framework in [Framework::BerryEsseen, Framework::Renyi, Framework::Zcdp, Framework::Fdp, Framework::Mmse] {
        println!("# {framework:?}");
        let spec = TableSpec {
            framework,
            n: 100,
            alpha_star: None,
            delta: 1e-6,
            grid: grid.clone(),
            decoys: 9,
            epsilon0: None,
            epsilon: 1.0,
        };
        emit_table(&dp_table(&spec)?, None)?;
    }
    println!("# Shuffle (local epsilon from Gaussian DP at K = 9)");
    let spec = TableSpec {
        framework: Framework::Shuffle,
        n: 100,
        alpha_star: None,
        delta: 1e-6,
        grid: vec![100, 1000, 10000],
        decoys: 9,
        epsilon0: None,
        epsilon: 1.0,
    };
    emit_table(&dp_table(&spec)?, None)?;
    Ok(())
}
