//! Empirical tails of a decoy-matrix entry against the Hoeffding bound.

use polyveil::sim::concentration_check;

fn main() -> polyveil::Result<()> {
    println!("K     r      empirical  hoeffding  within");
    for row in concentration_check(10, &[5, 20, 50], 20_000, &[0.05, 0.1, 0.2, 0.3], 3)? {
        println!(
            "{:<5} {:<6} {:<10.5} {:<10.5} {}",
            row.decoys, row.r, row.empirical_tail, row.hoeffding_bound, row.within
        );
    }
    Ok(())
}
