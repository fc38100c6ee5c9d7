//! Parameter solver for the matrix-revealing variant: the decoy count and
//! signal weight needed for (ε, δ)-DP, and how small the resulting signal is.

use polyveil::dp::full_protocol_dp;

fn main() -> polyveil::Result<()> {
    println!("n     eps   K          L_r         alpha*       snr_entry");
    for n in [10, 100, 1000] {
        for eps in [1.0, 4.0] {
            let f = full_protocol_dp(n, eps, 1e-6)?;
            println!("{n:<5} {eps:<5} {:<10} {:<11.4e} {:<12.4e} {:.3e}", f.decoys, f.l_r, f.alpha_star, f.snr_entry);
        }
    }
    Ok(())
}
