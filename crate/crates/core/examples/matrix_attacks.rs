//! Matrix attacks on a client's masked matrix D across signal weights:
//! Gaussian-approximation MAP, nearest permutation and per-block thresholding.

use polyveil::attacks::{block_threshold_attack, gaussian_map_attack, hungarian_attack};
use polyveil::hardness::CandidateSpace;
use polyveil::linalg::BitVector;
use polyveil::protocol::{client_mask_full, ClientRandomness, ProtocolParams, Variant};
use polyveil::sampling::{random_bits, CoefficientMode, RngStream};

fn main() -> polyveil::Result<()> {
    let (n, decoys, trials) = (6, 9, 200);
    let mut rng = RngStream::new(11, 0);
    println!("alpha*   map   hungarian   threshold (exact recovery rate)");
    for alpha in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let mut hits = [0usize; 3];
        for _ in 0..trials {
            let b: BitVector = random_bits(n, &mut rng)?;
            let r = ClientRandomness::draw(n, decoys, alpha, CoefficientMode::Dirichlet, &mut rng)?;
            let params = ProtocolParams::new(Variant::TwoLayerFull, n, 1, decoys, alpha);
            let d = client_mask_full(0, &b, &params, &r)?.d.expect("matrix");
            hits[0] += usize::from(gaussian_map_attack(&d, alpha, n, decoys, CandidateSpace::BlockEnum)?.success(&b));
            hits[1] += usize::from(hungarian_attack(&d).success(&b));
            hits[2] += usize::from(block_threshold_attack(&d, alpha)?.success(&b));
        }
        let rate = |h: usize| h as f64 / trials as f64;
        println!("{alpha:<8} {:<5.3} {:<11.3} {:.3}", rate(hits[0]), rate(hits[1]), rate(hits[2]));
    }
    Ok(())
}
