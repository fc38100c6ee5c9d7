//! Permutation and bit encodings, extraction vectors, bilinear forms and
//! doubly-stochastic validation.
//!
//! A bitstream `b ∈ {0,1}^n` is encoded as the block-diagonal permutation
//! `M(b) = blockdiag(Π(b_1), …, Π(b_n))` on `2n` points, where `Π(0)` is the
//! 2×2 identity and `Π(1)` the swap. Permutations are stored as 0-based index
//! maps with `P[a][σ(a)] = 1`, so the bilinear form `wᵀ P y` costs `O(m)` via
//! `(P y)_a = y_{σ(a)}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the doubly-stochastic check.
pub const DS_TOL: f64 = 1e-9;

/// A fixed-length vector of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    /// Builds a bit vector from booleans. Fails on an empty input.
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidParameter("bit vector must have n >= 1".into()));
        }
        Ok(Self { bits })
    }

    /// Builds a bit vector from `0`/`1` integers.
    pub fn from_u8(bits: &[u8]) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("bit value {bad} is not 0 or 1")));
        }
        Self::new(bits.iter().map(|&b| b == 1).collect())
    }

    /// The all-zero vector of length `n`.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![false; n])
    }

    /// Number of bits `n`.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Always false: a bit vector holds at least one bit.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit `j` (0-based).
    pub fn get(&self, j: usize) -> bool {
        self.bits[j]
    }

    /// The bits as a slice.
    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Number of ones `s = Σ b_j`.
    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }
}

impl TryFrom<Vec<u8>> for BitVector {
    type Error = Error;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        Self::from_u8(&v)
    }
}

impl From<BitVector> for Vec<u8> {
    fn from(b: BitVector) -> Self {
        b.bits.iter().map(|&x| u8::from(x)).collect()
    }
}

/// A bijection on `{0, …, m−1}` stored as the index map `map[i] = σ(i)`.
///
/// Serialized as a 1-based list so that JSON fixtures read like the
/// mathematical notation `σ = (σ(1), …, σ(m))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Validates a 0-based index map.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let m = map.len();
        if m == 0 {
            return Err(Error::InvalidParameter("permutation must have size >= 1".into()));
        }
        let mut seen = vec![false; m];
        for &v in &map {
            if v >= m || seen[v] {
                return Err(Error::InvalidParameter(format!(
                    "index map {map:?} is not a bijection on 0..{m}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    /// Validates a 1-based index map, as written in fixtures.
    pub fn from_one_based(map: &[usize]) -> Result<Self> {
        if map.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "1-based index map {map:?} contains 0"
            )));
        }
        Self::from_map(map.iter().map(|&v| v - 1).collect())
    }

    /// The identity on `m` points.
    pub fn identity(m: usize) -> Self {
        Self { map: (0..m).collect() }
    }

    /// Number of points `m`.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Always false: a permutation acts on at least one point.
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Image `σ(i)` of a 0-based index.
    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    /// The 0-based index map.
    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// The 1-based index map.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.map.iter().map(|&v| v + 1).collect()
    }

    /// The inverse permutation.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }

    /// Dense 0/1 matrix with `P[a][σ(a)] = 1`.
    pub fn to_matrix(&self) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(self.len());
        out.add_scaled_permutation(1.0, self);
        out
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::from_one_based(&v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.to_one_based()
    }
}

/// Dense row-major `m×m` matrix of finite `f64` entries.
///
/// Serialized as `{"m": m, "rows": [[…], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SquareMatrix {
    m: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    m: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for SquareMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows.len() != j.m {
            return Err(Error::Dimension(format!(
                "declared m = {} but {} rows given",
                j.m,
                j.rows.len()
            )));
        }
        Self::from_rows(j.rows)
    }
}

impl From<SquareMatrix> for MatrixJson {
    fn from(a: SquareMatrix) -> Self {
        MatrixJson { m: a.m, rows: a.rows() }
    }
}

impl SquareMatrix {
    /// The `m×m` zero matrix.
    pub fn zeros(m: usize) -> Self {
        Self { m, data: vec![0.0; m * m] }
    }

    /// The `m×m` all-ones matrix `J_m`.
    pub fn ones(m: usize) -> Self {
        Self { m, data: vec![1.0; m * m] }
    }

    /// The `m×m` identity.
    pub fn identity(m: usize) -> Self {
        Permutation::identity(m).to_matrix()
    }

    /// Builds a matrix from rows, checking squareness, `m >= 2` and finiteness.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::Dimension(format!("matrix size {m} < 2")));
        }
        let mut data = Vec::with_capacity(m * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite entry {v} in row {i}")));
            }
            data.extend(row);
        }
        Ok(Self { m, data })
    }

    /// Side length `m`.
    pub fn size(&self) -> usize {
        self.m
    }

    /// Entry `(a, b)`, 0-based.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.m + b]
    }

    /// Sets entry `(a, b)`.
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.data[a * self.m + b] = v;
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the rows.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// `self += alpha · P_σ`.
    ///
    /// # Panics
    /// Panics if the permutation size differs from `m`.
    pub fn add_scaled_permutation(&mut self, alpha: f64, sigma: &Permutation) {
        assert_eq!(sigma.len(), self.m, "permutation size must match matrix size");
        for (a, &b) in sigma.as_slice().iter().enumerate() {
            self.data[a * self.m + b] += alpha;
        }
    }

    /// Returns `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SquareMatrix, b: f64) -> Result<SquareMatrix> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { m: self.m, data })
    }

    /// Returns `s·self`.
    pub fn scaled(&self, s: f64) -> SquareMatrix {
        Self { m: self.m, data: self.data.iter().map(|x| s * x).collect() }
    }

    /// Frobenius norm `‖self‖_F`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Smallest entry.
    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.m).map(|r| r.iter().sum()).collect()
    }

    /// Column sums.
    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.m).map(|b| (0..self.m).map(|a| self.get(a, b)).sum()).collect()
    }

    fn check_same(&self, other: &SquareMatrix) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Dimension(format!("{}x{} vs {}x{}", self.m, self.m, other.m, other.m)));
        }
        Ok(())
    }
}

/// Left and right vectors of a bilinear extraction functional `A ↦ wᵀ A y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionPair {
    /// Left vector, length `2n`.
    pub w: Vec<f64>,
    /// Right vector, length `2n`.
    pub y: Vec<f64>,
}

impl ExtractionPair {
    /// Vector length `2n`.
    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// `Π(b)`: identity on two points for `false`, the swap for `true`.
pub fn encode_bit(b: bool) -> Permutation {
    if b {
        Permutation { map: vec![1, 0] }
    } else {
        Permutation::identity(2)
    }
}

/// The block-diagonal encoding `M(b)` on `2n` points.
pub fn encode_bitstream(b: &BitVector) -> Permutation {
    let mut map = Vec::with_capacity(2 * b.len());
    for (j, &bit) in b.as_slice().iter().enumerate() {
        let base = 2 * j;
        if bit {
            map.extend([base + 1, base]);
        } else {
            map.extend([base, base + 1]);
        }
    }
    Permutation { map }
}

/// Inverse of [`encode_bitstream`] on block-diagonal permutations: bit `j` is
/// read as `σ(2j) = 2j+1`. Any permutation is accepted, so this also decodes
/// guesses produced by attacks.
pub fn decode_bits(sigma: &Permutation) -> Result<BitVector> {
    if sigma.len() % 2 != 0 {
        return Err(Error::Dimension(format!("odd permutation size {}", sigma.len())));
    }
    BitVector::new((0..sigma.len() / 2).map(|j| sigma.image(2 * j) == 2 * j + 1).collect())
}

/// Standard pair `w = (1,0,1,0,…)`, `y = (0,1,0,1,…)` of length `2n`.
pub fn standard_extraction_pair(n: usize) -> ExtractionPair {
    let w = (0..2 * n).map(|a| if a % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let y = (0..2 * n).map(|a| if a % 2 == 1 { 1.0 } else { 0.0 }).collect();
    ExtractionPair { w, y }
}

/// Per-bit pair `w = e_{2j}`, `y = e_{2j+1}` (0-based `j < n`).
pub fn perbit_pair(n: usize, j: usize) -> Result<ExtractionPair> {
    if j >= n {
        return Err(Error::InvalidParameter(format!("bit index {j} out of range for n = {n}")));
    }
    let mut w = vec![0.0; 2 * n];
    let mut y = vec![0.0; 2 * n];
    w[2 * j] = 1.0;
    y[2 * j + 1] = 1.0;
    Ok(ExtractionPair { w, y })
}

/// Weighted pair: `w_{2j} = c_j`, `w_{2j+1} = 0`, `y` standard.
pub fn weighted_pair(c: &[f64]) -> Result<ExtractionPair> {
    if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and non-empty".into()));
    }
    let n = c.len();
    let mut w = vec![0.0; 2 * n];
    for (j, &cj) in c.iter().enumerate() {
        w[2 * j] = cj;
    }
    Ok(ExtractionPair { w, y: standard_extraction_pair(n).y })
}

/// `wᵀ A y`.
pub fn bilinear_extract(a: &SquareMatrix, p: &ExtractionPair) -> Result<f64> {
    let m = a.size();
    if p.w.len() != m || p.y.len() != m {
        return Err(Error::Dimension(format!(
            "matrix is {m}x{m} but extraction vectors have lengths {} and {}",
            p.w.len(),
            p.y.len()
        )));
    }
    let mut total = 0.0;
    for (row, &wa) in a.as_slice().chunks(m).zip(&p.w) {
        if wa != 0.0 {
            total += wa * row.iter().zip(&p.y).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    Ok(total)
}

/// `wᵀ P_σ y = Σ_a w_a y_{σ(a)}` in `O(m)`.
pub fn bilinear_extract_perm(sigma: &Permutation, p: &ExtractionPair) -> Result<f64> {
    let m = sigma.len();
    if p.w.len() != m || p.y.len() != m {
        return Err(Error::Dimension(format!(
            "permutation has size {m} but extraction vectors have lengths {} and {}",
            p.w.len(),
            p.y.len()
        )));
    }
    Ok(sigma.as_slice().iter().zip(&p.w).map(|(&s, &wa)| wa * p.y[s]).sum())
}

/// Integer evaluation of the standard functional on a permutation: the number
/// of even `a` with `σ(a)` odd. Equals `Σ b_j` on `M(b)`.
pub fn standard_count(sigma: &Permutation) -> u64 {
    sigma.as_slice().iter().step_by(2).filter(|&&s| s % 2 == 1).count() as u64
}

/// True iff every entry is `>= −tol` and every row and column sum lies in
/// `[1 − tol, 1 + tol]`.
pub fn is_doubly_stochastic(a: &SquareMatrix, tol: f64) -> bool {
    a.min_entry() >= -tol
        && a.row_sums().iter().chain(a.col_sums().iter()).all(|s| (s - 1.0).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(Permutation::from_map(vec![0, 0]).is_err());
        assert!(Permutation::from_map(vec![0, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let p = Permutation::from_one_based(&[3, 1, 4, 2]).unwrap();
        let inv = p.inverse();
        for i in 0..4 {
            assert_eq!(inv.image(p.image(i)), i);
        }
    }

    #[test]
    fn matrix_json_round_trip() {
        let a = Permutation::from_one_based(&[2, 1, 3, 4]).unwrap().to_matrix();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with("{\"m\":4,\"rows\""));
        let b: SquareMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decode_inverts_encode() {
        let b = BitVector::from_u8(&[1, 0, 1]).unwrap();
        assert_eq!(decode_bits(&encode_bitstream(&b)).unwrap(), b);
    }
}
