//! Exact oracles behind the hardness argument: Ryser permanents, support
//! sets, residuals of candidate encodings and the interior condition.

use polyveil::hardness::{
    feasible_candidates, interior_condition, permanent, residual, support_census, support_set, CandidateSpace,
    SUPPORT_TOL,
};
use polyveil::linalg::{encode_bitstream, SquareMatrix};
use polyveil::protocol::{client_mask_full, ClientRandomness, ProtocolParams, Variant};
use polyveil::sampling::{random_bits, CoefficientMode, RngStream};

fn main() -> polyveil::Result<()> {
    let block = SquareMatrix::from_rows(vec![
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 0.5, 0.5],
        vec![0.0, 0.0, 0.5, 0.5],
    ])?;
    let c = support_census(&block, SUPPORT_TOL)?;
    println!("two-block matrix: |supp| = {}, perm(A) = {}", c.support_size, c.permanent_value);
    for p in support_set(&block, SUPPORT_TOL)? {
        println!("  {:?}", p.to_one_based());
    }
    println!("perm(J_8) = {}", permanent(&SquareMatrix::ones(8))?);

    let (n, decoys) = (3, 400);
    let alpha = 1.0 / (4.0 * n as f64);
    let mut rng = RngStream::new(5, 0);
    let b = random_bits(n, &mut rng)?;
    let r = ClientRandomness::draw(n, decoys, alpha, CoefficientMode::Dirichlet, &mut rng)?;
    let d = client_mask_full(0, &b, &ProtocolParams::new(Variant::TwoLayerFull, n, 1, decoys, alpha), &r)?.d.expect("matrix");
    let res = residual(&d, &encode_bitstream(&b), alpha)?;
    println!("K = {decoys}: interior condition {}", interior_condition(&res, alpha));
    let feasible = feasible_candidates(&d, alpha, 1e-12, CandidateSpace::FullEnum)?;
    println!("{} of 720 candidates leave a nonnegative residual", feasible.len());
    Ok(())
}
