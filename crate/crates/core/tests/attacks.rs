use itertools::Itertools;
use polyveil::attacks::{
    block_threshold_attack, deshuffle_attack, deshuffle_table, gaussian_map_attack, hungarian_attack,
    max_weight_assignment, mc_density_estimate, scalar_posterior, wilson_interval, DeshuffleMode, EmpiricalDensity,
    McSampling, NoiseModel, DESHUFFLE_TOL,
};
use polyveil::hardness::CandidateSpace;
use polyveil::linalg::{encode_bitstream, BitVector, Permutation, SquareMatrix};
use polyveil::protocol::{client_mask_full, random_inputs, run_protocol, ClientRandomness, ProtocolParams, ServerView, Variant};
use polyveil::sampling::{fisher_yates, random_bits, CoefficientMode, RngStream};
use proptest::prelude::*;
use rand::Rng;

fn masked(n: usize, decoys: usize, alpha: f64, rng: &mut RngStream) -> (BitVector, SquareMatrix) {
    let b = random_bits(n, rng).unwrap();
    let r = ClientRandomness::draw(n, decoys, alpha, CoefficientMode::Dirichlet, rng).unwrap();
    let params = ProtocolParams::new(Variant::TwoLayerFull, n, 1, decoys, alpha);
    (b.clone(), client_mask_full(0, &b, &params, &r).unwrap().d.unwrap())
}

/// Brute-force maximum of Σ_a D[a, σ(a)] over all permutations.
fn brute_best(d: &SquareMatrix) -> f64 {
    let m = d.size();
    (0..m)
        .permutations(m)
        .map(|s| s.iter().enumerate().map(|(a, &b)| d.get(a, b)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn worked_table_lists_six_assignments_one_passing() {
    let f = [1.2, 1.4, 0.65];
    let eta = [0.8, 0.35, 0.9];
    let table = deshuffle_table(&f, &eta, 0.3, 2, DESHUFFLE_TOL).unwrap();
    assert_eq!(table.len(), 6);
    // Rows in lexicographic order of assignments; recompute every ŝ by hand.
    for row in &table {
        for (t, &j) in row.assignment.iter().enumerate() {
            assert!((row.s_hat[t] - (f[t] - eta[j]) / 0.3).abs() < 1e-12);
        }
    }
    let passing: Vec<_> = table.iter().filter(|r| r.passes).collect();
    assert_eq!(passing.len(), 1);
    assert_eq!(passing[0].assignment, vec![2, 0, 1]);
    let res = deshuffle_attack(&f, &eta, 0.3, 2, DESHUFFLE_TOL, DeshuffleMode::Enumerate).unwrap();
    assert!(res.unique);
    assert_eq!(res.passing_assignments[0].recovered, vec![1, 2, 1]);
    assert!(res.correct_recovered(&[1, 2, 1]));
}

#[test]
fn single_client_deshuffle_is_trivial() {
    let res = deshuffle_attack(&[0.3 * 2.0 + 0.41], &[0.41], 0.3, 3, DESHUFFLE_TOL, DeshuffleMode::Pruned).unwrap();
    assert!(res.unique);
    assert_eq!(res.passing_assignments[0].recovered, vec![2]);
}

#[test]
fn deshuffle_rejects_wrong_assignments_over_500_runs() {
    let (n, k) = (8, 5);
    let params = ProtocolParams::new(Variant::Compressed, n, k, 5, 1.0 / 32.0);
    let mut master = RngStream::new(21, 0);
    for _ in 0..500 {
        let seed = master.random::<u64>();
        let inputs = random_inputs(n, k, seed).unwrap();
        let t = run_protocol(&inputs, &params, seed).unwrap();
        let ServerView::Shuffled { f, shuffled_eta, .. } = &t.server_view else { unreachable!() };
        let truth: Vec<u64> = inputs.iter().map(BitVector::count_ones).collect();
        let enumerated = deshuffle_attack(f, shuffled_eta, params.alpha_star, n, DESHUFFLE_TOL, DeshuffleMode::Enumerate).unwrap();
        let pruned = deshuffle_attack(f, shuffled_eta, params.alpha_star, n, DESHUFFLE_TOL, DeshuffleMode::Pruned).unwrap();
        assert!(enumerated.correct_recovered(&truth));
        assert_eq!(enumerated, pruned);
    }
}

#[test]
fn pruned_mode_scales_past_enumeration() {
    let (n, k) = (6, 16);
    let params = ProtocolParams::new(Variant::Compressed, n, k, 4, 0.1);
    let inputs = random_inputs(n, k, 4).unwrap();
    let t = run_protocol(&inputs, &params, 4).unwrap();
    let ServerView::Shuffled { f, shuffled_eta, .. } = &t.server_view else { unreachable!() };
    assert!(deshuffle_table(f, shuffled_eta, 0.1, n, DESHUFFLE_TOL).is_err());
    let res = deshuffle_attack(f, shuffled_eta, 0.1, n, DESHUFFLE_TOL, DeshuffleMode::Pruned).unwrap();
    let truth: Vec<u64> = inputs.iter().map(BitVector::count_ones).collect();
    assert!(res.correct_recovered(&truth));
}

#[test]
fn gaussian_map_tie_scores_zero() {
    // b = (0,0) and b = (1,1) have equal diagonal weight 1.2.
    let mut d = SquareMatrix::zeros(4);
    d.add_scaled_permutation(0.3, &Permutation::identity(4));
    d.add_scaled_permutation(0.3, &Permutation::from_one_based(&[2, 1, 4, 3]).unwrap());
    d.add_scaled_permutation(0.4, &Permutation::from_one_based(&[3, 4, 1, 2]).unwrap());
    let out = gaussian_map_attack(&d, 0.3, 2, 2, CandidateSpace::BlockEnum).unwrap();
    assert_eq!(out.score, 0.0);
}

#[test]
fn gaussian_map_high_snr_is_perfect() {
    let mut rng = RngStream::new(31, 0);
    for _ in 0..100 {
        let (b, d) = masked(2, 2, 0.9, &mut rng);
        assert!(gaussian_map_attack(&d, 0.9, 2, 2, CandidateSpace::FullEnum).unwrap().success(&b));
    }
}

#[test]
fn gaussian_map_matches_frobenius_argmin() {
    let mut rng = RngStream::new(32, 0);
    let (n, alpha, decoys) = (2, 0.3, 4);
    let c = (1.0 - alpha) / (2 * n) as f64;
    for _ in 0..50 {
        let (_, d) = masked(n, decoys, alpha, &mut rng);
        let out = gaussian_map_attack(&d, alpha, n, decoys, CandidateSpace::FullEnum).unwrap();
        let dist = |s: &Permutation| {
            let mut r = d.clone();
            r.add_scaled_permutation(-alpha, s);
            r.as_slice().iter().map(|x| (x - c).powi(2)).sum::<f64>()
        };
        let best = (0..4)
            .permutations(4)
            .map(|s| dist(&Permutation::from_map(s).unwrap()))
            .fold(f64::INFINITY, f64::min);
        let polyveil::attacks::Guess::Permutation(g) = &out.guess else { unreachable!() };
        assert!((dist(g) - best).abs() < 1e-12);
    }
}

#[test]
fn exact_inputs_are_recovered() {
    let b = BitVector::from_u8(&[1, 0, 0, 1, 1]).unwrap();
    let m = encode_bitstream(&b).to_matrix();
    assert!(hungarian_attack(&m).success(&b));
    assert!(block_threshold_attack(&m, 1.0 - 1e-12).unwrap().success(&b));
}

#[test]
fn block_threshold_moderate_snr() {
    let mut rng = RngStream::new(33, 0);
    let mut acc = 0.0;
    for _ in 0..100 {
        let (b, d) = masked(8, 5, 0.5, &mut rng);
        acc += block_threshold_attack(&d, 0.5).unwrap().bit_accuracy(&b).unwrap();
    }
    assert!(acc / 100.0 >= 0.9, "accuracy {}", acc / 100.0);
}

#[test]
fn attack_success_versus_alpha_diagnostic() {
    // Reported only: success should broadly rise with α*.
    let grid = [0.05, 0.2, 0.4, 0.6, 0.8, 0.95];
    let mut rates = Vec::new();
    for &alpha in &grid {
        let mut rng = RngStream::new(34, 0);
        let wins = (0..100)
            .filter(|_| {
                let (b, d) = masked(4, 5, alpha, &mut rng);
                hungarian_attack(&d).success(&b)
            })
            .count();
        rates.push(wins);
    }
    eprintln!("Hungarian success per 100 over alpha grid {grid:?}: {rates:?}");
    assert!(rates.last() >= rates.first());
}

#[test]
fn posterior_edge_cases() {
    let g = NoiseModel::Gaussian { mean: 1.0, sd: 0.3 };
    let p = scalar_posterior(1.0 + 0.25 * 3.0, 0.25, 6, &g, None).unwrap();
    assert_eq!(p.map(), 3);
    assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let flat = scalar_posterior(1.3, 1e-12, 5, &g, None).unwrap();
    let tv: f64 = flat.probs.iter().map(|q| (q - 1.0 / 6.0).abs()).sum::<f64>() / 2.0;
    assert!(tv < 1e-6);
    assert!(scalar_posterior(1.0, 0.3, 2, &g, Some(&[0.5, 0.5])).is_err());
}

#[test]
fn histogram_posterior_matches_bayes_accuracy() {
    // MAP accuracy on fresh trials against the Bayes accuracy obtained by
    // integrating max_s π(s) μ(f − α* s) over f with the same histogram μ.
    let (n, decoys, alpha) = (4usize, 5usize, 0.5);
    let mut rng = RngStream::new(35, 0);
    let train: Vec<f64> = (0..200_000)
        .map(|_| ClientRandomness::draw(n, decoys, alpha, CoefficientMode::Dirichlet, &mut rng).unwrap().eta())
        .collect();
    let hist = EmpiricalDensity::from_samples(&train, 200).unwrap();
    let prior: Vec<f64> = (0..=n).map(|s| binom(n, s) / 16.0).collect();
    let model = NoiseModel::Histogram(hist.clone());
    let trials = 10_000;
    let mut hits = 0;
    for _ in 0..trials {
        let b = random_bits(n, &mut rng).unwrap();
        let eta = ClientRandomness::draw(n, decoys, alpha, CoefficientMode::Dirichlet, &mut rng).unwrap().eta();
        let f = alpha * b.count_ones() as f64 + eta;
        let post = scalar_posterior(f, alpha, n, &model, Some(&prior)).unwrap();
        hits += usize::from(post.map() as u64 == b.count_ones());
    }
    let empirical = hits as f64 / trials as f64;
    let lo = hist.lo;
    let hi = hist.lo + hist.width * hist.counts.len() as f64 + alpha * n as f64;
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let bayes: f64 = (0..steps)
        .map(|i| {
            let f = lo + (i as f64 + 0.5) * h;
            (0..=n).map(|s| prior[s] * hist.density(f - alpha * s as f64)).fold(0.0, f64::max) * h
        })
        .sum();
    assert!((empirical - bayes).abs() < 0.02, "MAP accuracy {empirical} vs Bayes {bayes}");
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn mc_single_permutation_target() {
    let q = Permutation::from_one_based(&[2, 4, 1, 3]).unwrap();
    let r = q.to_matrix();
    let ex = mc_density_estimate(&r, 1, 0.3, McSampling::Exhaustive, 1e-9, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!((ex.hit_count, ex.trials), (1, 24));
    assert_eq!(ex.feasible_examples, vec![vec![q.clone()]]);
    let mc = mc_density_estimate(&r, 1, 0.3, McSampling::Uniform { samples: 48_000 }, 1e-9, &mut RngStream::new(1, 0))
        .unwrap();
    assert!(mc.wilson_low <= 1.0 / 24.0 && 1.0 / 24.0 <= mc.wilson_high, "{mc:?}");
}

#[test]
fn mc_interior_target_is_rarely_hit() {
    let mut rng = RngStream::new(36, 0);
    let r = ClientRandomness::draw(3, 40, 0.2, CoefficientMode::Dirichlet, &mut rng).unwrap().decoy_sum().scaled(1.0 / 0.8);
    assert!(r.min_entry() > 0.0);
    let res = mc_density_estimate(&r, 3, 0.2, McSampling::Uniform { samples: 100_000 }, 1e-9, &mut rng).unwrap();
    assert!(res.hit_rate < 1e-4, "hit rate {}", res.hit_rate);
}

#[test]
fn wilson_interval_sanity() {
    let (lo, hi) = wilson_interval(50, 100);
    assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    let (lo0, _) = wilson_interval(0, 1000);
    assert_eq!(lo0, 0.0);
}

proptest! {
    #[test]
    fn hungarian_matches_brute_force(m in 2usize..=7, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
        let d = SquareMatrix::from_rows(rows).unwrap();
        let sigma = max_weight_assignment(&d);
        let got: f64 = (0..m).map(|a| d.get(a, sigma.image(a))).sum();
        prop_assert!((got - brute_best(&d)).abs() < 1e-12);
    }

    #[test]
    fn matrix_attacks_are_deterministic(n in 1usize..6, decoys in 2usize..6, seed in any::<u64>()) {
        let (_, d) = masked(n, decoys, 0.3, &mut RngStream::new(seed, 0));
        prop_assert_eq!(hungarian_attack(&d), hungarian_attack(&d));
        prop_assert_eq!(block_threshold_attack(&d, 0.3).unwrap(), block_threshold_attack(&d, 0.3).unwrap());
    }

    #[test]
    fn true_assignment_always_passes(n in 1usize..10, k in 3usize..8, seed in any::<u64>()) {
        let params = ProtocolParams::new(Variant::Compressed, n, k, 3, 1.0 / (4.0 * n as f64));
        let inputs = random_inputs(n, k, seed).unwrap();
        let t = run_protocol(&inputs, &params, seed).unwrap();
        let ServerView::Shuffled { f, shuffled_eta, .. } = &t.server_view else { unreachable!() };
        let res = deshuffle_attack(f, shuffled_eta, params.alpha_star, n, DESHUFFLE_TOL, DeshuffleMode::Pruned).unwrap();
        let truth: Vec<u64> = inputs.iter().map(BitVector::count_ones).collect();
        prop_assert!(res.passing_assignments.iter().any(|p| p.recovered == truth));
    }

    #[test]
    fn fisher_yates_guesses_decode(n in 1usize..10, seed in any::<u64>()) {
        let p = fisher_yates(2 * n, &mut RngStream::new(seed, 0));
        let d = p.to_matrix();
        prop_assert_eq!(max_weight_assignment(&d), p);
    }
}
