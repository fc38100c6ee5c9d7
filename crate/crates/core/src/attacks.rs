//! Adversary toolbox: de-shuffling of the one-layer variants, scalar
//! posteriors, and matrix attacks on masked matrices.

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardness::{for_each_candidate, tuple_feasibility, CandidateSpace};
use crate::linalg::{decode_bits, encode_bitstream, BitVector, Permutation, SquareMatrix};
use crate::sampling::fisher_yates;

/// Integrality tolerance of the de-shuffling test.
pub const DESHUFFLE_TOL: f64 = 1e-6;
/// Largest `k` for exhaustive assignment enumeration.
pub const ENUMERATE_MAX_K: usize = 10;
/// Largest `k` for the pruned exact-cover search.
pub const PRUNED_MAX_K: usize = 20;
/// Largest number of tuples visited by exhaustive Monte Carlo sampling.
pub const EXHAUSTIVE_MAX_TUPLES: u64 = 10_000_000;

/// Search strategy for [`deshuffle_attack`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeshuffleMode {
    /// Try all `k!` assignments (`k <= 10`).
    Enumerate,
    /// Per-client candidate pruning followed by exact cover (`k <= 20`).
    Pruned,
}

/// One assignment `σ` (client `t` paired with shuffled noise `σ(t)`) and the
/// counts it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    /// `assignment[t]` is the shuffled position matched to client `t`.
    pub assignment: Vec<usize>,
    /// `ŝ_t = (f_t − η̃_{σ(t)})/α*`.
    pub s_hat: Vec<f64>,
    /// True iff every `ŝ_t` is within tolerance of an integer in `[0, n]`.
    pub passes: bool,
}

/// An assignment that passed the integrality test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassingAssignment {
    /// `assignment[t]` is the shuffled position matched to client `t`.
    pub assignment: Vec<usize>,
    /// Recovered per-client counts.
    pub recovered: Vec<u64>,
}

/// Outcome of the de-shuffling attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeshuffleResult {
    /// All passing assignments.
    pub passing_assignments: Vec<PassingAssignment>,
    /// True iff exactly one assignment passed.
    pub unique: bool,
}

impl DeshuffleResult {
    /// True iff the attack singled out one assignment and it yields `truth`.
    pub fn correct_recovered(&self, truth: &[u64]) -> bool {
        self.unique && self.passing_assignments[0].recovered == truth
    }
}

fn integral_count(q: f64, n: usize, tol: f64) -> Option<u64> {
    let r = q.round();
    ((q - r).abs() <= tol && r >= 0.0 && r <= n as f64).then_some(r as u64)
}

fn check_deshuffle_args(f: &[f64], eta: &[f64], alpha_star: f64) -> Result<()> {
    if f.len() != eta.len() || f.is_empty() {
        return Err(Error::Dimension(format!("{} signals and {} noise terms", f.len(), eta.len())));
    }
    if !(alpha_star > 0.0 && alpha_star < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha_star {alpha_star} not in (0,1)")));
    }
    Ok(())
}

/// Every assignment with its implied counts, in lexicographic order of the
/// assignment (`k <= 10`).
pub fn deshuffle_table(f: &[f64], shuffled_eta: &[f64], alpha_star: f64, n: usize, tol: f64) -> Result<Vec<AssignmentRow>> {
    check_deshuffle_args(f, shuffled_eta, alpha_star)?;
    let k = f.len();
    if k > ENUMERATE_MAX_K {
        return Err(Error::SizeCap(format!(
            "enumeration limited to k <= {ENUMERATE_MAX_K}, got {k}; use the pruned mode"
        )));
    }
    Ok((0..k)
        .permutations(k)
        .map(|assignment| {
            let s_hat: Vec<f64> =
                assignment.iter().enumerate().map(|(t, &j)| (f[t] - shuffled_eta[j]) / alpha_star).collect();
            let passes = s_hat.iter().all(|&q| integral_count(q, n, tol).is_some());
            AssignmentRow { assignment, s_hat, passes }
        })
        .collect())
}

/// Matches shuffled noise terms to identity-linked signals by keeping the
/// assignments under which every implied count `(f_t − η̃_{σ(t)})/α*` is an
/// integer in `[0, n]`.
pub fn deshuffle_attack(
    f: &[f64],
    shuffled_eta: &[f64],
    alpha_star: f64,
    n: usize,
    tol: f64,
    mode: DeshuffleMode,
) -> Result<DeshuffleResult> {
    check_deshuffle_args(f, shuffled_eta, alpha_star)?;
    let passing_assignments = match mode {
        DeshuffleMode::Enumerate => deshuffle_table(f, shuffled_eta, alpha_star, n, tol)?
            .into_iter()
            .filter(|r| r.passes)
            .map(|r| PassingAssignment {
                recovered: r.s_hat.iter().map(|&q| integral_count(q, n, tol).expect("passing row")).collect(),
                assignment: r.assignment,
            })
            .collect(),
        DeshuffleMode::Pruned => pruned_cover(f, shuffled_eta, alpha_star, n, tol)?,
    };
    let unique = passing_assignments.len() == 1;
    Ok(DeshuffleResult { passing_assignments, unique })
}

fn pruned_cover(f: &[f64], eta: &[f64], alpha_star: f64, n: usize, tol: f64) -> Result<Vec<PassingAssignment>> {
    let k = f.len();
    if k > PRUNED_MAX_K {
        return Err(Error::SizeCap(format!("pruned search limited to k <= {PRUNED_MAX_K}, got {k}")));
    }
    let candidates: Vec<Vec<(usize, u64)>> = f
        .iter()
        .map(|&ft| {
            eta.iter()
                .enumerate()
                .filter_map(|(j, &e)| integral_count((ft - e) / alpha_star, n, tol).map(|s| (j, s)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut used = vec![false; k];
    let mut assignment = vec![0; k];
    let mut recovered = vec![0; k];
    cover(0, &candidates, &mut used, &mut assignment, &mut recovered, &mut out);
    Ok(out)
}

fn cover(
    t: usize,
    candidates: &[Vec<(usize, u64)>],
    used: &mut [bool],
    assignment: &mut [usize],
    recovered: &mut [u64],
    out: &mut Vec<PassingAssignment>,
) {
    if t == candidates.len() {
        out.push(PassingAssignment { assignment: assignment.to_vec(), recovered: recovered.to_vec() });
        return;
    }
    for &(j, s) in &candidates[t] {
        if !used[j] {
            used[j] = true;
            assignment[t] = j;
            recovered[t] = s;
            cover(t + 1, candidates, used, assignment, recovered, out);
            used[j] = false;
        }
    }
}

/// Histogram density estimate on equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDensity {
    /// Left edge of the first bin.
    pub lo: f64,
    /// Bin width.
    pub width: f64,
    /// Per-bin counts.
    pub counts: Vec<u64>,
    /// Number of samples.
    pub total: u64,
}

impl EmpiricalDensity {
    /// Builds a histogram with `bins` bins spanning the sample range.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(Error::InvalidParameter("need samples and at least one bin".into()));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Self { lo, width, counts, total: samples.len() as u64 })
    }

    /// Density at `x`, zero outside the sample range.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        let i = ((x - self.lo) / self.width) as usize;
        if i >= self.counts.len() {
            if x <= self.lo + self.width * self.counts.len() as f64 {
                return self.counts[self.counts.len() - 1] as f64 / (self.total as f64 * self.width);
            }
            return 0.0;
        }
        self.counts[i] as f64 / (self.total as f64 * self.width)
    }
}

/// Noise law assumed by [`scalar_posterior`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Normal approximation of `η`.
    Gaussian {
        /// Mean of `η`.
        mean: f64,
        /// Standard deviation of `η`.
        sd: f64,
    },
    /// Histogram of fresh `η` draws.
    Histogram(EmpiricalDensity),
}

impl NoiseModel {
    fn density(&self, x: f64) -> f64 {
        match self {
            NoiseModel::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp()
            }
            NoiseModel::Histogram(h) => h.density(x),
        }
    }
}

/// Posterior over the bit count `s ∈ {0, …, n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    /// `Pr[s | f]`.
    pub probs: Vec<f64>,
    /// True when every likelihood vanished and the uniform law was returned.
    pub degenerate: bool,
}

impl Posterior {
    /// Maximum a posteriori count (smallest on ties).
    pub fn map(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc })
            .0
    }
}

/// `Pr[s | f] ∝ μ(f − α* s) π(s)` with a uniform prior unless one is given.
pub fn scalar_posterior(
    f: f64,
    alpha_star: f64,
    n: usize,
    model: &NoiseModel,
    prior: Option<&[f64]>,
) -> Result<Posterior> {
    if let Some(p) = prior {
        if p.len() != n + 1 {
            return Err(Error::Dimension(format!("prior of length {} for n = {n}", p.len())));
        }
    }
    let weights: Vec<f64> = (0..=n)
        .map(|s| model.density(f - alpha_star * s as f64) * prior.map_or(1.0, |p| p[s]))
        .collect();
    let z: f64 = weights.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Ok(Posterior { probs: vec![1.0 / (n + 1) as f64; n + 1], degenerate: true });
    }
    Ok(Posterior { probs: weights.iter().map(|w| w / z).collect(), degenerate: false })
}

/// An attack's guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guess {
    /// A guessed encoding permutation.
    Permutation(Permutation),
    /// A guessed bitstream.
    Bits(BitVector),
}

/// A guess with an attack-specific score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    /// The guess.
    pub guess: Guess,
    /// Attack-specific confidence score.
    pub score: f64,
}

impl AttackOutcome {
    /// Bits read off the guess (`b̂_j = [σ̂(2j) = 2j+1]` for permutations).
    pub fn guessed_bits(&self) -> Result<BitVector> {
        match &self.guess {
            Guess::Permutation(p) => decode_bits(p),
            Guess::Bits(b) => Ok(b.clone()),
        }
    }

    /// True iff the guess equals the ground truth (`M(b)` for permutations).
    pub fn success(&self, truth: &BitVector) -> bool {
        match &self.guess {
            Guess::Permutation(p) => *p == encode_bitstream(truth),
            Guess::Bits(b) => b == truth,
        }
    }

    /// Fraction of correctly guessed bits.
    pub fn bit_accuracy(&self, truth: &BitVector) -> Result<f64> {
        let g = self.guessed_bits()?;
        if g.len() != truth.len() {
            return Err(Error::Dimension(format!("guess of length {} for {} bits", g.len(), truth.len())));
        }
        let hits = g.as_slice().iter().zip(truth.as_slice()).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / truth.len() as f64)
    }
}

fn diagonal_weight(d: &SquareMatrix, sigma: &Permutation) -> f64 {
    sigma.as_slice().iter().enumerate().map(|(a, &b)| d.get(a, b)).sum()
}

/// Gaussian-approximation MAP: the candidate minimizing
/// `‖D − α* M′ − (1 − α*)/(2n) J‖_F`.
///
/// The score is the log-likelihood margin between the best and second-best
/// candidates under isotropic noise of variance `((1 − α*) σ_K)²`, with
/// `σ_K² = (2n − 1)/((2n)² K)`. A score of zero reports a tie.
pub fn gaussian_map_attack(
    d: &SquareMatrix,
    alpha_star: f64,
    n: usize,
    decoys: usize,
    space: CandidateSpace,
) -> Result<AttackOutcome> {
    if d.size() != 2 * n {
        return Err(Error::Dimension(format!("{}x{} matrix for n = {n}", d.size(), d.size())));
    }
    if decoys == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    // ‖D − cJ − α*M′‖² = ‖D − cJ‖² − 2α* Σ_a (D[a,σ(a)] − c) + 2n α*², so the
    // ordering of candidates is the ordering of Σ_a D[a, σ(a)].
    let mut best: Option<(f64, Permutation)> = None;
    let mut second = f64::NEG_INFINITY;
    for_each_candidate(n, space, |cand| {
        let t = diagonal_weight(d, cand);
        match &best {
            Some((bt, _)) if t <= *bt => second = second.max(t),
            Some((bt, _)) => {
                second = *bt;
                best = Some((t, cand.clone()));
            }
            None => best = Some((t, cand.clone())),
        }
    })?;
    let (t1, guess) = best.expect("candidate space is non-empty");
    let m = 2.0 * n as f64;
    let sigma_k_sq = (m - 1.0) / (m * m * decoys as f64);
    let noise_var = (1.0 - alpha_star).powi(2) * sigma_k_sq;
    let score = if second.is_finite() { alpha_star * (t1 - second) / noise_var } else { f64::INFINITY };
    Ok(AttackOutcome { guess: Guess::Permutation(guess), score })
}

/// Nearest permutation in Frobenius norm: maximizes `Σ_a D[a, σ(a)]` with an
/// `O(m³)` Hungarian solver. The score is the mean matched entry.
pub fn hungarian_attack(d: &SquareMatrix) -> AttackOutcome {
    let sigma = max_weight_assignment(d);
    let score = diagonal_weight(d, &sigma) / d.size() as f64;
    AttackOutcome { guess: Guess::Permutation(sigma), score }
}

/// Maximum-weight perfect matching on a square profit matrix (Hungarian
/// method with potentials on the cost `−D`).
pub fn max_weight_assignment(d: &SquareMatrix) -> Permutation {
    let m = d.size();
    let cost = |i: usize, j: usize| -d.get(i - 1, j - 1);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut map = vec![0; m];
    for j in 1..=m {
        map[p[j] - 1] = j - 1;
    }
    Permutation::from_map(map).expect("assignment is a bijection")
}

/// Per-block test `b̂_j = 1` iff `D[2j, 2j+1] >= α*/2 + (1 − α*)/(2n)`.
/// The score is the smallest distance of a tested entry to the threshold.
pub fn block_threshold_attack(d: &SquareMatrix, alpha_star: f64) -> Result<AttackOutcome> {
    let m = d.size();
    if m % 2 != 0 {
        return Err(Error::Dimension(format!("odd matrix size {m}")));
    }
    let thr = alpha_star / 2.0 + (1.0 - alpha_star) / m as f64;
    let entries: Vec<f64> = (0..m / 2).map(|j| d.get(2 * j, 2 * j + 1)).collect();
    let bits = BitVector::new(entries.iter().map(|&x| x >= thr).collect())?;
    let score = entries.iter().map(|x| (x - thr).abs()).fold(f64::INFINITY, f64::min);
    Ok(AttackOutcome { guess: Guess::Bits(bits), score })
}

/// How tuples are drawn in [`mc_density_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McSampling {
    /// Independent uniform tuples.
    Uniform {
        /// Number of tuples.
        samples: u64,
    },
    /// Every tuple of `S_{2n}^K` exactly once.
    Exhaustive,
}

/// Result of [`mc_density_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McDensityResult {
    /// Number of feasible tuples seen.
    pub hit_count: u64,
    /// Number of tuples tested.
    pub trials: u64,
    /// `hit_count / trials`.
    pub hit_rate: f64,
    /// Lower end of the 95% Wilson interval.
    pub wilson_low: f64,
    /// Upper end of the 95% Wilson interval.
    pub wilson_high: f64,
    /// Up to ten feasible tuples.
    pub feasible_examples: Vec<Vec<Permutation>>,
}

/// 95% Wilson score interval for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = trials as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Estimates the probability that a uniform `K`-tuple of permutations can
/// express `(1 − α*) R_target` with strictly positive coefficients.
pub fn mc_density_estimate<R: Rng + ?Sized>(
    r_target: &SquareMatrix,
    decoys: usize,
    alpha_star: f64,
    sampling: McSampling,
    tol: f64,
    rng: &mut R,
) -> Result<McDensityResult> {
    if decoys == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    let m = r_target.size();
    let mut hits = 0u64;
    let mut trials = 0u64;
    let mut examples = Vec::new();
    let mut test = |tuple: &[Permutation]| -> Result<()> {
        trials += 1;
        let inside = tuple.iter().all(|s| s.as_slice().iter().enumerate().all(|(a, &b)| r_target.get(a, b) > tol));
        if inside && tuple_feasibility(tuple, r_target, alpha_star, tol)?.feasible() {
            hits += 1;
            if examples.len() < 10 {
                examples.push(tuple.to_vec());
            }
        }
        Ok(())
    };
    match sampling {
        McSampling::Uniform { samples } => {
            for _ in 0..samples {
                let tuple: Vec<Permutation> = (0..decoys).map(|_| fisher_yates(m, rng)).collect();
                test(&tuple)?;
            }
        }
        McSampling::Exhaustive => {
            let perms: Vec<Permutation> =
                (0..m).permutations(m).map(|s| Permutation::from_map(s).expect("bijection")).collect();
            let total = (perms.len() as u64).checked_pow(decoys as u32);
            if total.is_none_or(|t| t > EXHAUSTIVE_MAX_TUPLES) {
                return Err(Error::SizeCap(format!(
                    "exhaustive sampling limited to {EXHAUSTIVE_MAX_TUPLES} tuples"
                )));
            }
            for idx in std::iter::repeat_n(0..perms.len(), decoys).multi_cartesian_product() {
                let tuple: Vec<Permutation> = idx.iter().map(|&i| perms[i].clone()).collect();
                test(&tuple)?;
            }
        }
    }
    let (wilson_low, wilson_high) = wilson_interval(hits, trials);
    Ok(McDensityResult {
        hit_count: hits,
        trials,
        hit_rate: if trials > 0 { hits as f64 / trials as f64 } else { 0.0 },
        wilson_low,
        wilson_high,
        feasible_examples: examples,
    })
}
