//! Exact small-scale oracles for the Birkhoff-polytope hardness argument:
//! permanents, support sets, residuals, the interior condition, candidate and
//! tuple feasibility, and the `2n = 4, K = 2` reduction census.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{encode_bitstream, is_doubly_stochastic, BitVector, Permutation, SquareMatrix};
use crate::sampling::CoefficientVector;

/// Zero-detection tolerance for support matrices.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Largest size accepted by Ryser's formula.
pub const RYSER_MAX: usize = 24;
/// Largest size accepted by permutation enumeration.
pub const ENUM_MAX: usize = 8;
/// Largest `n` accepted by block-diagonal candidate enumeration.
pub const BLOCK_ENUM_MAX_N: usize = 20;

/// Permanent by Ryser's inclusion–exclusion formula with Gray-code updates,
/// `O(2^m · m)`. For 0/1 inputs the sum runs in 128-bit integers and is exact.
pub fn permanent(a: &SquareMatrix) -> Result<f64> {
    let m = a.size();
    if m > RYSER_MAX {
        return Err(Error::SizeCap(format!("Ryser permanent limited to m <= {RYSER_MAX}, got {m}")));
    }
    if a.as_slice().iter().all(|&x| x == 0.0 || x == 1.0) {
        if let Some(v) = ryser_integer(a) {
            return Ok(v as f64);
        }
    }
    Ok(ryser_float(a))
}

/// Exact permanent of a 0/1 matrix as an integer.
pub fn permanent_01(a: &SquareMatrix) -> Result<u128> {
    let m = a.size();
    if m > RYSER_MAX {
        return Err(Error::SizeCap(format!("Ryser permanent limited to m <= {RYSER_MAX}, got {m}")));
    }
    if !a.as_slice().iter().all(|&x| x == 0.0 || x == 1.0) {
        return Err(Error::InvalidParameter("permanent_01 needs a 0/1 matrix".into()));
    }
    let v = ryser_integer(a).ok_or_else(|| Error::SizeCap("permanent overflowed 128 bits".into()))?;
    u128::try_from(v).map_err(|_| Error::InvalidParameter("negative permanent of a 0/1 matrix".into()))
}

fn ryser_integer(a: &SquareMatrix) -> Option<i128> {
    let m = a.size();
    let cols: Vec<Vec<i128>> = (0..m).map(|j| (0..m).map(|i| a.get(i, j) as i128).collect()).collect();
    let mut row_sums = vec![0i128; m];
    let mut total: i128 = 0;
    for g in 1u32..(1u32 << m) {
        let j = g.trailing_zeros() as usize;
        let gray = g ^ (g >> 1);
        let adding = gray & (1 << j) != 0;
        let subset = gray;
        for (s, &c) in row_sums.iter_mut().zip(&cols[j]) {
            if adding {
                *s += c;
            } else {
                *s -= c;
            }
        }
        let mut prod: i128 = 1;
        for &s in &row_sums {
            prod = prod.checked_mul(s)?;
            if prod == 0 {
                break;
            }
        }
        let sign_negative = (m - subset.count_ones() as usize) % 2 == 1;
        total = if sign_negative { total.checked_sub(prod)? } else { total.checked_add(prod)? };
    }
    Some(total)
}

fn ryser_float(a: &SquareMatrix) -> f64 {
    let m = a.size();
    let mut row_sums = vec![0.0f64; m];
    let mut total = 0.0f64;
    for g in 1u32..(1u32 << m) {
        let j = g.trailing_zeros() as usize;
        let gray = g ^ (g >> 1);
        let sign = if gray & (1 << j) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += sign * a.get(i, j);
        }
        let prod: f64 = row_sums.iter().product();
        if (m - gray.count_ones() as usize) % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    total
}

/// Permanent by summing over all `m!` permutations. Reference oracle.
pub fn permanent_enumerate(a: &SquareMatrix) -> Result<f64> {
    let m = a.size();
    if m > ENUM_MAX {
        return Err(Error::SizeCap(format!("enumeration limited to m <= {ENUM_MAX}, got {m}")));
    }
    Ok((0..m).permutations(m).map(|s| s.iter().enumerate().map(|(i, &j)| a.get(i, j)).product::<f64>()).sum())
}

/// `A[a][b] = 1` iff `R′[a][b] > tol`.
pub fn support_matrix(r: &SquareMatrix, tol: f64) -> SquareMatrix {
    let mut a = SquareMatrix::zeros(r.size());
    for i in 0..r.size() {
        for j in 0..r.size() {
            if r.get(i, j) > tol {
                a.set(i, j, 1.0);
            }
        }
    }
    a
}

/// Every permutation whose matrix lies inside the support of `R′`.
pub fn support_set(r: &SquareMatrix, tol: f64) -> Result<Vec<Permutation>> {
    let m = r.size();
    if m > ENUM_MAX {
        return Err(Error::SizeCap(format!("support enumeration limited to 2n <= {ENUM_MAX}, got {m}")));
    }
    Ok((0..m)
        .permutations(m)
        .filter(|s| s.iter().enumerate().all(|(i, &j)| r.get(i, j) > tol))
        .map(|s| Permutation::from_map(s).expect("itertools yields bijections"))
        .collect())
}

/// Support matrix together with its size and permanent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCensus {
    /// The 0/1 support matrix `A(R′)`.
    pub support_matrix: SquareMatrix,
    /// Number of permutations inside the support.
    pub support_size: u64,
    /// `perm(A(R′))`.
    pub permanent_value: u64,
}

/// Computes [`SupportCensus`] for `2n <= 8`.
pub fn support_census(r: &SquareMatrix, tol: f64) -> Result<SupportCensus> {
    let support_matrix = support_matrix(r, tol);
    let support_size = support_set(r, tol)?.len() as u64;
    let permanent_value = permanent_01(&support_matrix)? as u64;
    Ok(SupportCensus { support_matrix, support_size, permanent_value })
}

/// `R′ = (D − α* M′)/(1 − α*)`.
pub fn residual(d: &SquareMatrix, candidate: &Permutation, alpha_star: f64) -> Result<SquareMatrix> {
    if candidate.len() != d.size() {
        return Err(Error::Dimension(format!("candidate of size {} for {}x{} matrix", candidate.len(), d.size(), d.size())));
    }
    check_alpha(alpha_star)?;
    let mut r = d.clone();
    r.add_scaled_permutation(-alpha_star, candidate);
    Ok(r.scaled(1.0 / (1.0 - alpha_star)))
}

/// True iff every entry of `R` exceeds `α*/(1 − α*)`.
pub fn interior_condition(r: &SquareMatrix, alpha_star: f64) -> bool {
    r.min_entry() > alpha_star / (1.0 - alpha_star)
}

/// Which permutations are considered as encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSpace {
    /// All of `S_{2n}`, `2n <= 8`.
    FullEnum,
    /// The `2^n` block-diagonal encodings, `n <= 20`.
    BlockEnum,
}

/// Calls `visit` on every candidate of the space, in a fixed order.
pub fn for_each_candidate(n: usize, space: CandidateSpace, mut visit: impl FnMut(&Permutation)) -> Result<()> {
    match space {
        CandidateSpace::FullEnum => {
            if 2 * n > ENUM_MAX {
                return Err(Error::SizeCap(format!("full enumeration limited to 2n <= {ENUM_MAX}, got {}", 2 * n)));
            }
            for s in (0..2 * n).permutations(2 * n) {
                visit(&Permutation::from_map(s).expect("itertools yields bijections"));
            }
        }
        CandidateSpace::BlockEnum => {
            if n > BLOCK_ENUM_MAX_N {
                return Err(Error::SizeCap(format!("block enumeration limited to n <= {BLOCK_ENUM_MAX_N}, got {n}")));
            }
            for code in 0u32..(1u32 << n) {
                let bits = BitVector::new((0..n).map(|j| code >> j & 1 == 1).collect())?;
                visit(&encode_bitstream(&bits));
            }
        }
    }
    Ok(())
}

/// Candidates `M′` whose residual has every entry `>= −tol`.
pub fn feasible_candidates(
    d: &SquareMatrix,
    alpha_star: f64,
    tol: f64,
    space: CandidateSpace,
) -> Result<Vec<Permutation>> {
    check_alpha(alpha_star)?;
    if d.size() % 2 != 0 {
        return Err(Error::Dimension(format!("odd matrix size {}", d.size())));
    }
    let scale = 1.0 - alpha_star;
    let base_ok = d.min_entry() / scale >= -tol;
    let mut out = Vec::new();
    if !base_ok {
        return Ok(out);
    }
    for_each_candidate(d.size() / 2, space, |cand| {
        let ok = cand.as_slice().iter().enumerate().all(|(a, &b)| (d.get(a, b) - alpha_star) / scale >= -tol);
        if ok {
            out.push(cand.clone());
        }
    })?;
    Ok(out)
}

/// Shape of the coefficient solution set of a tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TupleStatus {
    /// No strictly positive solution.
    Infeasible,
    /// A unique, strictly positive solution.
    Point {
        /// The coefficients.
        alpha: CoefficientVector,
    },
    /// The system is consistent with a solution set of positive dimension.
    PositiveDimensional {
        /// Dimension of the affine solution set.
        dimension: usize,
        /// Minimum-norm solution when it is strictly positive.
        witness: Option<CoefficientVector>,
    },
}

/// Result of [`tuple_feasibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleFeasibility {
    /// Solution shape.
    pub status: TupleStatus,
    /// Numerical rank of the stacked system.
    pub rank: usize,
    /// Euclidean norm of the least-squares residual.
    pub residual_norm: f64,
}

impl TupleFeasibility {
    /// True when a strictly positive solution was exhibited.
    pub fn feasible(&self) -> bool {
        match &self.status {
            TupleStatus::Infeasible => false,
            TupleStatus::Point { .. } => true,
            TupleStatus::PositiveDimensional { witness, .. } => witness.is_some(),
        }
    }

    /// The exhibited coefficients, if any.
    pub fn alpha(&self) -> Option<&CoefficientVector> {
        match &self.status {
            TupleStatus::Point { alpha } => Some(alpha),
            TupleStatus::PositiveDimensional { witness, .. } => witness.as_ref(),
            TupleStatus::Infeasible => None,
        }
    }
}

/// Solves `Σ α_i P_{σ_i} = (1 − α*) R` with `Σ α_i = 1 − α*` by least squares
/// on the stacked entry and simplex-sum constraints, with SVD rank detection.
///
/// A tuple is feasible when the least-squares residual is at most `tol` and
/// the solution is strictly positive (every `α_i > tol`). When the system is
/// rank deficient the minimum-norm solution is tested as the witness.
pub fn tuple_feasibility(
    sigmas: &[Permutation],
    r_target: &SquareMatrix,
    alpha_star: f64,
    tol: f64,
) -> Result<TupleFeasibility> {
    check_alpha(alpha_star)?;
    let m = r_target.size();
    let k = sigmas.len();
    if k == 0 {
        return Err(Error::InvalidParameter("empty tuple".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| s.len() != m) {
        return Err(Error::Dimension(format!("permutation of size {} for {m}x{m} target", s.len())));
    }
    let total = 1.0 - alpha_star;
    let rows = m * m + 1;
    let mut a = DMatrix::<f64>::zeros(rows, k);
    for (i, s) in sigmas.iter().enumerate() {
        for (r, &c) in s.as_slice().iter().enumerate() {
            a[(r * m + c, i)] = 1.0;
        }
        a[(m * m, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(rows);
    for (idx, &v) in r_target.as_slice().iter().enumerate() {
        rhs[idx] = total * v;
    }
    rhs[m * m] = total;

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-10 * smax.max(1.0);
    let rank = svd.rank(eps);
    let x = svd.solve(&rhs, eps).map_err(|e| Error::Infeasible(e.to_string()))?;
    let residual_norm = (&a * &x - &rhs).norm();

    let positive = x.iter().all(|&v| v > tol);
    let coeffs = || CoefficientVector { alphas: x.iter().copied().collect(), total };
    let status = if residual_norm > tol {
        TupleStatus::Infeasible
    } else if rank == k {
        if positive {
            TupleStatus::Point { alpha: coeffs() }
        } else {
            TupleStatus::Infeasible
        }
    } else {
        TupleStatus::PositiveDimensional { dimension: k - rank, witness: positive.then(coeffs) }
    };
    Ok(TupleFeasibility { status, rank, residual_norm })
}

/// A tuple consistent with a residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistentTuple {
    /// The decoy permutations.
    pub sigmas: Vec<Permutation>,
    /// The determined `α_1`, or `None` when any `α_1 ∈ (0, 1 − α*)` works.
    pub alpha1: Option<f64>,
}

/// Census of consistent tuples for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleCensus {
    /// The candidate encoding `M′`.
    pub candidate: Permutation,
    /// Whether `R′` is entrywise non-negative (hence doubly stochastic).
    pub residual_doubly_stochastic: bool,
    /// Number of tuples enumerated, `((2n)!)^K`.
    pub total_tuples: u64,
    /// Consistent tuples with their coefficients.
    pub consistent: Vec<ConsistentTuple>,
    /// `consistent.len()`.
    pub count: u64,
}

/// Tolerance used by the census equations.
pub const CENSUS_TOL: f64 = 1e-9;

/// For each of the 24 candidates at `2n = 4`, enumerates all 576 ordered
/// pairs `(σ_1, σ_2)` and keeps those for which
/// `α_1 P_1 + (1 − α* − α_1) P_2 = (1 − α*) R′` has a solution with both
/// coefficients strictly positive. The substitution leaves 16 equations in
/// the single unknown `α_1`.
pub fn worked_reduction_census(d: &SquareMatrix, alpha_star: f64, decoys: usize) -> Result<Vec<TupleCensus>> {
    check_alpha(alpha_star)?;
    if d.size() != 4 || decoys != 2 {
        return Err(Error::SizeCap(format!(
            "the reduction census is defined for 2n = 4 and K = 2, got 2n = {} and K = {decoys}",
            d.size()
        )));
    }
    let perms: Vec<Permutation> =
        (0..4).permutations(4).map(|s| Permutation::from_map(s).expect("bijection")).collect();
    let total = 1.0 - alpha_star;
    let mut out = Vec::with_capacity(perms.len());
    for cand in &perms {
        let r = residual(d, cand, alpha_star)?;
        let mut consistent = Vec::new();
        for s1 in &perms {
            for s2 in &perms {
                if let Some(alpha1) = pair_solution(s1, s2, &r, total) {
                    consistent.push(ConsistentTuple { sigmas: vec![s1.clone(), s2.clone()], alpha1 });
                }
            }
        }
        out.push(TupleCensus {
            candidate: cand.clone(),
            residual_doubly_stochastic: is_doubly_stochastic(&r, CENSUS_TOL),
            total_tuples: (perms.len() * perms.len()) as u64,
            count: consistent.len() as u64,
            consistent,
        });
    }
    Ok(out)
}

/// `Some(Some(α_1))` for a unique solution, `Some(None)` for a segment,
/// `None` when inconsistent or not strictly positive.
fn pair_solution(s1: &Permutation, s2: &Permutation, r: &SquareMatrix, total: f64) -> Option<Option<f64>> {
    let m = r.size();
    let mut alpha1: Option<f64> = None;
    for a in 0..m {
        for b in 0..m {
            let p1 = f64::from(u8::from(s1.image(a) == b));
            let p2 = f64::from(u8::from(s2.image(a) == b));
            let rhs = total * (r.get(a, b) - p2);
            if p1 == p2 {
                if rhs.abs() > CENSUS_TOL {
                    return None;
                }
            } else {
                let v = rhs / (p1 - p2);
                match alpha1 {
                    Some(prev) if (prev - v).abs() > CENSUS_TOL => return None,
                    Some(_) => {}
                    None => alpha1 = Some(v),
                }
            }
        }
    }
    match alpha1 {
        Some(v) if v > CENSUS_TOL && total - v > CENSUS_TOL => Some(Some(v)),
        Some(_) => None,
        None => Some(None),
    }
}

fn check_alpha(alpha_star: f64) -> Result<()> {
    if !(alpha_star > 0.0 && alpha_star < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha_star {alpha_star} not in (0,1)")));
    }
    Ok(())
}
