use std::collections::HashSet;

use itertools::Itertools;
use polyveil::hardness::{
    feasible_candidates, for_each_candidate, interior_condition, permanent, permanent_01, permanent_enumerate,
    residual, support_census, support_matrix, support_set, tuple_feasibility, worked_reduction_census, CandidateSpace,
    TupleStatus, SUPPORT_TOL,
};
use polyveil::linalg::{encode_bitstream, BitVector, Permutation, SquareMatrix};
use polyveil::protocol::{client_mask_full, ClientRandomness, ProtocolParams, Variant};
use polyveil::sampling::{fisher_yates, random_bits, CoefficientMode, RngStream};
use polyveil::Error;
use proptest::prelude::*;
use rand::Rng;

fn two_block() -> SquareMatrix {
    SquareMatrix::from_rows(vec![
        vec![1.0, 1.0, 0.0, 0.0],
        vec![1.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0, 1.0],
    ])
    .unwrap()
}

fn perm(one_based: &[usize]) -> Permutation {
    Permutation::from_one_based(one_based).unwrap()
}

fn masked(n: usize, decoys: usize, alpha: f64, rng: &mut RngStream) -> (BitVector, ClientRandomness, SquareMatrix) {
    let b = random_bits(n, rng).unwrap();
    let r = ClientRandomness::draw(n, decoys, alpha, CoefficientMode::Dirichlet, rng).unwrap();
    let params = ProtocolParams::new(Variant::TwoLayerFull, n, 1, decoys, alpha);
    let d = client_mask_full(0, &b, &params, &r).unwrap().d.unwrap();
    (b, r, d)
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

#[test]
fn permanent_reference_values() {
    for m in 2..=12 {
        assert_eq!(permanent(&SquareMatrix::identity(m)).unwrap(), 1.0);
        assert_eq!(permanent_01(&SquareMatrix::ones(m)).unwrap() as f64, factorial(m));
    }
    assert_eq!(permanent(&SquareMatrix::ones(4)).unwrap(), 24.0);
    assert_eq!(permanent(&two_block()).unwrap(), 4.0);
    assert!(matches!(permanent_enumerate(&SquareMatrix::ones(9)), Err(Error::SizeCap(_))));
    assert!(permanent_01(&SquareMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()).is_err());
}

#[test]
fn support_matrix_examples() {
    let interior = SquareMatrix::ones(4).scaled(0.25);
    assert_eq!(support_matrix(&interior, SUPPORT_TOL), SquareMatrix::ones(4));
    let p = perm(&[3, 1, 4, 2]).to_matrix();
    assert_eq!(support_matrix(&p, SUPPORT_TOL), p);
    assert_eq!(support_matrix(&two_block().scaled(0.5), SUPPORT_TOL), two_block());
}

#[test]
fn support_set_examples() {
    let got: HashSet<Vec<usize>> =
        support_set(&two_block().scaled(0.5), SUPPORT_TOL).unwrap().iter().map(Permutation::to_one_based).collect();
    let want: HashSet<Vec<usize>> =
        [vec![1, 2, 3, 4], vec![2, 1, 3, 4], vec![1, 2, 4, 3], vec![2, 1, 4, 3]].into_iter().collect();
    assert_eq!(got, want);
    assert_eq!(support_set(&SquareMatrix::ones(4).scaled(0.25), SUPPORT_TOL).unwrap().len(), 24);
    let p = perm(&[2, 4, 1, 3]);
    assert_eq!(support_set(&p.to_matrix(), SUPPORT_TOL).unwrap(), vec![p]);
}

#[test]
fn residual_of_true_candidate_is_normalized_decoy_sum() {
    let p1 = perm(&[3, 1, 4, 2]);
    let p2 = perm(&[2, 1, 4, 3]);
    let r = ClientRandomness::injected(2, 0.3, vec![p1.clone(), p2.clone()], vec![0.5, 0.2]).unwrap();
    let b = BitVector::from_u8(&[1, 0]).unwrap();
    let params = ProtocolParams::new(Variant::TwoLayerFull, 2, 1, 2, 0.3);
    let d = client_mask_full(0, &b, &params, &r).unwrap().d.unwrap();
    let got = residual(&d, &encode_bitstream(&b), 0.3).unwrap();
    let mut want = SquareMatrix::zeros(4);
    want.add_scaled_permutation(0.5 / 0.7, &p1);
    want.add_scaled_permutation(0.2 / 0.7, &p2);
    assert!(got.max_abs_diff(&want).unwrap() <= 1e-12);
    assert!(polyveil::linalg::is_doubly_stochastic(&got, 1e-12));
}

#[test]
fn wrong_candidate_residual_differs_in_four_entries_per_block() {
    let mut rng = RngStream::new(41, 0);
    let (n, alpha) = (5, 0.3);
    for _ in 0..20 {
        let (b, _, d) = masked(n, 4, alpha, &mut rng);
        let r_true = residual(&d, &encode_bitstream(&b), alpha).unwrap();
        let flips: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let other = BitVector::new(b.as_slice().iter().zip(&flips).map(|(x, f)| x ^ f).collect()).unwrap();
        let r_other = residual(&d, &encode_bitstream(&other), alpha).unwrap();
        let diffs: Vec<f64> = r_other
            .as_slice()
            .iter()
            .zip(r_true.as_slice())
            .map(|(a, b)| a - b)
            .filter(|x| x.abs() > 1e-12)
            .collect();
        let blocks = flips.iter().filter(|&&f| f).count();
        assert_eq!(diffs.len(), 4 * blocks);
        assert!(diffs.iter().all(|x| (x.abs() - alpha / (1.0 - alpha)).abs() < 1e-12));
    }
}

#[test]
fn interior_condition_examples() {
    for n in 1..=6 {
        let r = SquareMatrix::ones(2 * n).scaled(1.0 / (2 * n) as f64);
        assert!(interior_condition(&r, 1.0 / (4.0 * n as f64)));
    }
    assert!(!interior_condition(&perm(&[2, 1, 4, 3]).to_matrix(), 1e-6));
}

#[test]
fn interior_condition_frequency_report() {
    let (n, decoys) = (10, 20);
    let alpha = 1.0 / (4.0 * n as f64);
    let mut rng = RngStream::new(42, 0);
    let hits = (0..1000)
        .filter(|_| {
            let (b, _, d) = masked(n, decoys, alpha, &mut rng);
            interior_condition(&residual(&d, &encode_bitstream(&b), alpha).unwrap(), alpha)
        })
        .count();
    eprintln!("interior condition held in {hits}/1000 draws at n={n}, K={decoys}, alpha*=1/(4n)");
}

#[test]
fn feasible_candidate_examples() {
    let mut rng = RngStream::new(43, 0);
    let (_, _, d) = masked(2, 200, 0.05, &mut rng);
    assert!(d.min_entry() > 0.05);
    assert_eq!(feasible_candidates(&d, 0.05, 1e-12, CandidateSpace::FullEnum).unwrap().len(), 24);

    let p = perm(&[4, 3, 1, 2]);
    assert_eq!(feasible_candidates(&p.to_matrix(), 0.5, 1e-12, CandidateSpace::FullEnum).unwrap(), vec![p]);

    // The hand-worked D_1 has zeros; brute-force the residual sign check.
    let d1 = SquareMatrix::from_rows(vec![
        vec![0.0, 0.5, 0.5, 0.0],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.3, 0.7],
        vec![0.0, 0.5, 0.2, 0.3],
    ])
    .unwrap();
    let got = feasible_candidates(&d1, 0.3, 1e-12, CandidateSpace::FullEnum).unwrap();
    let brute: Vec<Permutation> = (0..4)
        .permutations(4)
        .map(|s| Permutation::from_map(s).unwrap())
        .filter(|s| residual(&d1, s, 0.3).unwrap().min_entry() >= -1e-12)
        .collect();
    assert_eq!(got, brute);
    assert!(!got.is_empty() && got.len() < 24);
    assert!(got.contains(&perm(&[2, 1, 3, 4])));
}

#[test]
fn block_space_enumerates_encodings() {
    let mut seen = Vec::new();
    for_each_candidate(3, CandidateSpace::BlockEnum, |p| seen.push(p.clone())).unwrap();
    assert_eq!(seen.len(), 8);
    assert!(seen.iter().all(|p| encode_bitstream(&polyveil::linalg::decode_bits(p).unwrap()) == *p));
    assert!(for_each_candidate(5, CandidateSpace::FullEnum, |_| {}).is_err());
}

#[test]
fn tuple_feasibility_examples() {
    let q = perm(&[2, 3, 4, 1]);
    let single = tuple_feasibility(&[q.clone()], &q.to_matrix(), 0.3, 1e-9).unwrap();
    match single.status {
        TupleStatus::Point { alpha } => assert!((alpha.alphas[0] - 0.7).abs() < 1e-12),
        other => panic!("expected a point, got {other:?}"),
    }

    // Generated target with a full-rank tuple recovers the injected coefficients.
    let sigmas = vec![perm(&[1, 2, 3, 4, 5, 6]), perm(&[2, 3, 1, 5, 6, 4]), perm(&[6, 5, 4, 3, 2, 1])];
    let alphas = [0.3, 0.25, 0.15];
    let mut r = SquareMatrix::zeros(6);
    for (s, a) in sigmas.iter().zip(alphas) {
        r.add_scaled_permutation(a / 0.7, s);
    }
    let fit = tuple_feasibility(&sigmas, &r, 0.3, 1e-9).unwrap();
    assert_eq!(fit.rank, 3);
    let got = fit.alpha().unwrap();
    for (g, w) in got.alphas.iter().zip(alphas) {
        assert!((g - w).abs() < 1e-8);
    }

    // A permutation placing a 1 where the target is zero cannot be used.
    let bad = vec![sigmas[0].clone(), perm(&[1, 3, 2, 4, 5, 6])];
    assert!(!tuple_feasibility(&bad, &r, 0.3, 1e-9).unwrap().feasible());
}

#[test]
fn worked_census_guards_and_zero_counts() {
    let d = SquareMatrix::identity(6);
    assert!(matches!(worked_reduction_census(&d, 0.3, 2), Err(Error::SizeCap(_))));
    assert!(worked_reduction_census(&SquareMatrix::identity(4), 0.3, 3).is_err());

    let b = BitVector::from_u8(&[1, 0]).unwrap();
    let r = ClientRandomness::injected(2, 0.3, vec![perm(&[3, 4, 1, 2]), perm(&[4, 3, 2, 1])], vec![0.4, 0.3]).unwrap();
    let params = ProtocolParams::new(Variant::TwoLayerFull, 2, 1, 2, 0.3);
    let d = client_mask_full(0, &b, &params, &r).unwrap().d.unwrap();
    let census = worked_reduction_census(&d, 0.3, 2).unwrap();
    let mut saw_non_ds = false;
    for entry in &census {
        assert_eq!(entry.total_tuples, 576);
        assert_eq!(entry.count as usize, entry.consistent.len());
        if !entry.residual_doubly_stochastic {
            saw_non_ds = true;
            assert_eq!(entry.count, 0);
        }
        for t in &entry.consistent {
            let res = residual(&d, &entry.candidate, 0.3).unwrap();
            if let Some(a1) = t.alpha1 {
                let mut rebuilt = SquareMatrix::zeros(4);
                rebuilt.add_scaled_permutation(a1, &t.sigmas[0]);
                rebuilt.add_scaled_permutation(0.7 - a1, &t.sigmas[1]);
                assert!(rebuilt.max_abs_diff(&res.scaled(0.7)).unwrap() < 1e-9);
            }
        }
    }
    assert!(saw_non_ds);
}

#[test]
fn interior_constancy_exhaustive_at_six() {
    let (n, alpha) = (3, 1.0 / 12.0);
    let mut rng = RngStream::new(44, 0);
    let mut tested = 0;
    for _ in 0..10 {
        let (b, _, d) = masked(n, 600, alpha, &mut rng);
        if !interior_condition(&residual(&d, &encode_bitstream(&b), alpha).unwrap(), alpha) {
            continue;
        }
        tested += 1;
        let feasible = feasible_candidates(&d, alpha, 1e-12, CandidateSpace::FullEnum).unwrap();
        assert_eq!(feasible.len(), 720);
        for cand in feasible {
            let sm = support_matrix(&residual(&d, &cand, alpha).unwrap(), SUPPORT_TOL);
            assert_eq!(permanent_01(&sm).unwrap(), 720);
        }
    }
    assert!(tested >= 5, "only {tested} interior draws");
}

proptest! {
    #[test]
    fn ryser_equals_enumeration_on_01(m in 2usize..=8, seed in any::<u64>(), density in 0.2f64..0.9) {
        let mut rng = RngStream::new(seed, 0);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..m).map(|_| f64::from(u8::from(rng.random_bool(density)))).collect()).collect();
        let a = SquareMatrix::from_rows(rows).unwrap();
        prop_assert_eq!(permanent_01(&a).unwrap() as f64, permanent_enumerate(&a).unwrap());
        prop_assert_eq!(permanent(&a).unwrap(), permanent_enumerate(&a).unwrap());
    }

    #[test]
    fn ryser_equals_enumeration_on_reals(m in 2usize..=7, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
        let a = SquareMatrix::from_rows(rows).unwrap();
        let (x, y) = (permanent(&a).unwrap(), permanent_enumerate(&a).unwrap());
        prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
    }

    #[test]
    fn support_size_equals_support_permanent(n in 1usize..=4, decoys in 1usize..6, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let sigmas: Vec<Permutation> = (0..decoys).map(|_| fisher_yates(2 * n, &mut rng)).collect();
        let mut r = SquareMatrix::zeros(2 * n);
        for s in &sigmas {
            r.add_scaled_permutation(1.0 / decoys as f64, s);
        }
        let c = support_census(&r, SUPPORT_TOL).unwrap();
        prop_assert_eq!(c.support_size, c.permanent_value);
        prop_assert!(c.support_size >= 1);
    }

    #[test]
    fn feasible_tuples_reproduce_target(decoys in 1usize..=3, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let alpha = 0.25;
        let r = ClientRandomness::draw(2, 2, alpha, CoefficientMode::Dirichlet, &mut rng).unwrap().decoy_sum().scaled(1.0 / (1.0 - alpha));
        for _ in 0..200 {
            let tuple: Vec<Permutation> = (0..decoys).map(|_| fisher_yates(4, &mut rng)).collect();
            let fit = tuple_feasibility(&tuple, &r, alpha, 1e-9).unwrap();
            if let Some(a) = fit.alpha() {
                let mut rebuilt = SquareMatrix::zeros(4);
                for (s, &x) in tuple.iter().zip(&a.alphas) {
                    rebuilt.add_scaled_permutation(x, s);
                }
                prop_assert!(rebuilt.max_abs_diff(&r.scaled(1.0 - alpha)).unwrap() <= 1e-8);
                prop_assert!(a.alphas.iter().all(|&x| x > 0.0));
            }
        }
    }
}
