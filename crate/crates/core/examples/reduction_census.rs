//! The 2n = 4, K = 2 reduction census: for every candidate encoding, the
//! ordered decoy pairs that could have produced the observed matrix, checked
//! against exhaustive tuple enumeration.

use polyveil::attacks::{mc_density_estimate, McSampling};
use polyveil::hardness::{residual, worked_reduction_census};
use polyveil::linalg::{BitVector, Permutation};
use polyveil::protocol::{client_mask_full, ClientRandomness, ProtocolParams, Variant};
use polyveil::sampling::RngStream;

fn main() -> polyveil::Result<()> {
    let alpha = 0.3;
    let decoys = vec![Permutation::from_one_based(&[3, 4, 1, 2])?, Permutation::from_one_based(&[4, 3, 2, 1])?];
    let r = ClientRandomness::injected(2, alpha, decoys, vec![0.4, 0.3])?;
    let b = BitVector::from_u8(&[1, 0])?;
    let d = client_mask_full(0, &b, &ProtocolParams::new(Variant::TwoLayerFull, 2, 1, 2, alpha), &r)?.d.expect("matrix");

    let mut rng = RngStream::new(0, 0);
    for entry in worked_reduction_census(&d, alpha, 2)? {
        if !entry.residual_doubly_stochastic {
            continue;
        }
        let res = residual(&d, &entry.candidate, alpha)?;
        let mc = mc_density_estimate(&res, 2, alpha, McSampling::Exhaustive, 1e-9, &mut rng)?;
        println!(
            "candidate {:?}: {} consistent pairs of {} (exhaustive check: {})",
            entry.candidate.to_one_based(),
            entry.count,
            entry.total_tuples,
            mc.hit_count
        );
    }
    Ok(())
}
