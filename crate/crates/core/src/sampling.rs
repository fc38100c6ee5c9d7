//! Deterministic, seedable randomness: uniform permutations and positive
//! simplex coefficients.
//!
//! Every logical actor owns an [`RngStream`] derived from a master seed and a
//! stream label. Streams are ChaCha8 instances keyed by the seed with the
//! label selecting the ChaCha stream, so clients can be sampled in any order
//! or on any thread and still reproduce the same draws.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BitVector, Permutation};

/// Relative floor below which a coefficient draw is rejected and redrawn.
pub const COEFFICIENT_FLOOR: f64 = 1e-12;

/// A labelled, reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Stream `stream_id` under master seed `seed`.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    /// Master seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream label.
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Strictly positive coefficients summing to `total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    /// The coefficients `α_1, …, α_K`.
    pub alphas: Vec<f64>,
    /// Their prescribed sum `1 − α*`.
    pub total: f64,
}

impl CoefficientVector {
    /// Validates positivity and `|Σα_i − total| ≤ 1e−12`.
    pub fn new(alphas: Vec<f64>, total: f64) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidParameter("need at least one coefficient".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidParameter(format!("coefficient {a} is not strictly positive")));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - total).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "coefficients sum to {sum}, expected {total}"
            )));
        }
        Ok(Self { alphas, total })
    }

    /// Number of coefficients `K`.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    /// Always false: at least one coefficient is stored.
    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// How decoy coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientMode {
    /// Flat Dirichlet(1, …, 1) scaled to the total.
    #[default]
    Dirichlet,
    /// Deterministic equal weights `total / K`. Gives a discrete noise law.
    Uniform,
}

/// A uniformly random permutation of `m` points (Fisher–Yates).
pub fn fisher_yates<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Permutation {
    let mut map: Vec<usize> = (0..m).collect();
    map.shuffle(rng);
    let p = Permutation::from_map(map);
    debug_assert!(p.is_ok());
    p.expect("shuffling the identity map yields a bijection")
}

/// Uniform draw from `{α_i > 0, Σα_i = total}` via normalized exponentials.
pub fn dirichlet_simplex<R: Rng + ?Sized>(k: usize, total: f64, rng: &mut R) -> Result<CoefficientVector> {
    check_simplex_args(k, total)?;
    loop {
        let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = draws.iter().sum();
        let alphas: Vec<f64> = draws.iter().map(|e| e / s * total).collect();
        if alphas.iter().all(|&a| a >= COEFFICIENT_FLOOR * total) {
            return renormalize(alphas, total);
        }
    }
}

/// Equal weights `total / K`.
pub fn uniform_weights(k: usize, total: f64) -> Result<CoefficientVector> {
    check_simplex_args(k, total)?;
    renormalize(vec![total / k as f64; k], total)
}

/// Draws coefficients under the given mode.
pub fn draw_coefficients<R: Rng + ?Sized>(
    mode: CoefficientMode,
    k: usize,
    total: f64,
    rng: &mut R,
) -> Result<CoefficientVector> {
    match mode {
        CoefficientMode::Dirichlet => dirichlet_simplex(k, total, rng),
        CoefficientMode::Uniform => uniform_weights(k, total),
    }
}

/// `n` independent fair bits.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<BitVector> {
    BitVector::new((0..n).map(|_| rng.random::<bool>()).collect())
}

fn check_simplex_args(k: usize, total: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    if !(total > 0.0 && total < 1.0) {
        return Err(Error::InvalidParameter(format!("simplex total {total} not in (0,1)")));
    }
    Ok(())
}

/// Pushes the rounding residue of the sum onto the largest coefficient so the
/// sum matches `total` to within one ulp-scale error.
fn renormalize(mut alphas: Vec<f64>, total: f64) -> Result<CoefficientVector> {
    let sum: f64 = alphas.iter().sum();
    let (imax, _) = alphas
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &a)| if a > acc.1 { (i, a) } else { acc });
    alphas[imax] += total - sum;
    CoefficientVector::new(alphas, total)
}
