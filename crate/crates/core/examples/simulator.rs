//! The server-view simulator: views generated from the aggregate alone are
//! compared with real runs, and two input sets with the same aggregate are
//! compared with each other.

use polyveil::linalg::BitVector;
use polyveil::protocol::{ProtocolParams, Variant};
use polyveil::sim::{indistinguishability_test, simulator_vs_real};

fn main() -> polyveil::Result<()> {
    let params = ProtocolParams::new(Variant::TwoLayerFull, 4, 4, 5, 0.2);
    let packed: Vec<BitVector> = [[1, 1, 1, 1], [1, 1, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0]]
        .iter()
        .map(|b| BitVector::from_u8(b))
        .collect::<polyveil::Result<_>>()?;
    let spread: Vec<BitVector> = [[1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 0, 0], [0, 0, 1, 1]]
        .iter()
        .map(|b| BitVector::from_u8(b))
        .collect::<polyveil::Result<_>>()?;

    let sim = simulator_vs_real(&packed, &params, 5000, 1)?;
    println!("simulator vs real: KS(H) p = {:.3}, KS(F) p = {:.3}", sim.ks_h.p_value, sim.ks_f.p_value);
    let ind = indistinguishability_test(&packed, &spread, &params, 5000, 2)?;
    println!(
        "packed vs spread: KS(F) p = {:.3}, KS(H) p = {:.3}, KS(F - a*S) p = {:.3}",
        ind.ks_f.p_value, ind.ks_h.p_value, ind.ks_shifted.p_value
    );
    Ok(())
}
