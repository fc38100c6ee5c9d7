//! Several statistics from one matrix-revealing run: the total count, every
//! per-bit column count and a weighted sum.

use polyveil::protocol::{
    extract_perbit_aggregate, extract_weighted_aggregate, random_inputs, run_protocol, ProtocolParams, Variant,
};

fn main() -> polyveil::Result<()> {
    let (n, k) = (6, 8);
    let inputs = random_inputs(n, k, 99)?;
    let t = run_protocol(&inputs, &ProtocolParams::new(Variant::TwoLayerFull, n, k, 4, 0.05), 1)?;
    println!("S = {} (truth {})", t.recovered_s, t.ground_truth_s);
    for j in 0..n {
        let truth = inputs.iter().filter(|b| b.get(j)).count();
        println!("bit {j}: {} clients (truth {truth})", extract_perbit_aggregate(&t, j)?);
    }
    let weights: Vec<f64> = (0..n).map(|j| (1u64 << j) as f64).collect();
    let truth: f64 = inputs.iter().map(|b| (0..n).filter(|&j| b.get(j)).map(|j| weights[j]).sum::<f64>()).sum();
    println!("weighted sum = {:.6} (truth {truth})", extract_weighted_aggregate(&t, &weights)?);
    Ok(())
}
