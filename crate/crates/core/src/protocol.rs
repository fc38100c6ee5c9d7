//! The four protocol variants as explicit entity pipelines.
//!
//! * `Full`: clients send `D_t` to the server, noise terms `η_t` go through a
//!   trusted shuffler. The server extracts `f_t = wᵀ D_t y` itself.
//! * `Compressed`: clients send the scalar `f_t = α* s_t + η_t` instead of
//!   `D_t`; noise terms are shuffled as above.
//! * `TwoLayerFull`: an aggregator receives `D_t`, a separate noise
//!   aggregator receives `η_t` and the decoy sum `N_t = Σ α_i P_i`. The server
//!   only sees the totals `(F, H)`.
//! * `TwoLayerCompressed`: as `TwoLayerFull` with scalar `f_t`.
//!
//! In every variant the server outputs `S = round((F − H) / α*)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    bilinear_extract, encode_bitstream, is_doubly_stochastic, perbit_pair, standard_count,
    standard_extraction_pair, weighted_pair, BitVector, ExtractionPair, Permutation, SquareMatrix, DS_TOL,
};
use crate::sampling::{draw_coefficients, fisher_yates, random_bits, CoefficientMode, CoefficientVector, RngStream};

/// Stream label of the trusted shuffler.
pub const SHUFFLER_STREAM: u64 = u64::MAX;
/// Stream label used to draw random client inputs.
pub const INPUT_STREAM: u64 = u64::MAX - 1;

/// Protocol variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Matrices to the server, shuffled noise.
    #[serde(rename = "full")]
    Full,
    /// Scalars to the server, shuffled noise.
    #[serde(rename = "compressed")]
    Compressed,
    /// Matrices to an aggregator, noise to a noise aggregator.
    #[serde(rename = "two-layer")]
    TwoLayerFull,
    /// Scalars to an aggregator, noise to a noise aggregator.
    #[serde(rename = "two-layer-compressed")]
    TwoLayerCompressed,
}

impl Variant {
    /// All variants in a fixed order.
    pub const ALL: [Variant; 4] =
        [Variant::Full, Variant::Compressed, Variant::TwoLayerFull, Variant::TwoLayerCompressed];

    /// True for the variants whose noise terms go through the shuffler.
    pub fn is_shuffled(self) -> bool {
        matches!(self, Variant::Full | Variant::Compressed)
    }

    /// True for the variants in which clients submit full matrices.
    pub fn sends_matrices(self) -> bool {
        matches!(self, Variant::Full | Variant::TwoLayerFull)
    }
}

/// Public parameters of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Bits per client.
    pub n: usize,
    /// Number of clients.
    pub k: usize,
    /// Signal weight `α* ∈ (0,1)`.
    pub alpha_star: f64,
    /// Decoys per client `K >= 2`.
    #[serde(rename = "K")]
    pub decoys: usize,
    /// Protocol variant.
    pub variant: Variant,
    /// Coefficient distribution.
    #[serde(default)]
    pub coefficients: CoefficientMode,
}

impl ProtocolParams {
    /// Parameters with flat Dirichlet coefficients.
    pub fn new(variant: Variant, n: usize, k: usize, decoys: usize, alpha_star: f64) -> Self {
        Self { n, k, alpha_star, decoys, variant, coefficients: CoefficientMode::Dirichlet }
    }

    /// Checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha_star {} not in (0,1)", self.alpha_star)));
        }
        if self.decoys < 2 {
            return Err(Error::InvalidParameter(format!("K = {} but K >= 2 is required", self.decoys)));
        }
        let min_k = if self.variant.is_shuffled() { 3 } else { 1 };
        if self.k < min_k {
            return Err(Error::InvalidParameter(format!(
                "k = {} but the {:?} variant requires k >= {min_k}",
                self.k, self.variant
            )));
        }
        Ok(())
    }

    /// `1 − α*`.
    pub fn decoy_mass(&self) -> f64 {
        1.0 - self.alpha_star
    }
}

/// A client's private randomness: decoy permutations and their coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRandomness {
    /// Decoy permutations `P_1, …, P_K` on `2n` points.
    pub decoys: Vec<Permutation>,
    /// Coefficients summing to `1 − α*`.
    pub coefficients: CoefficientVector,
}

impl ClientRandomness {
    /// Draws `K` uniform decoys and coefficients from `rng`.
    pub fn draw<R: Rng + ?Sized>(
        n: usize,
        decoys: usize,
        alpha_star: f64,
        mode: CoefficientMode,
        rng: &mut R,
    ) -> Result<Self> {
        let perms = (0..decoys).map(|_| fisher_yates(2 * n, rng)).collect();
        let coefficients = draw_coefficients(mode, decoys, 1.0 - alpha_star, rng)?;
        Ok(Self { decoys: perms, coefficients })
    }

    /// Injected randomness, checked against `(n, α*)`.
    pub fn injected(n: usize, alpha_star: f64, decoys: Vec<Permutation>, alphas: Vec<f64>) -> Result<Self> {
        if decoys.len() != alphas.len() {
            return Err(Error::Dimension(format!(
                "{} decoys but {} coefficients",
                decoys.len(),
                alphas.len()
            )));
        }
        if let Some(p) = decoys.iter().find(|p| p.len() != 2 * n) {
            return Err(Error::Dimension(format!("decoy of size {} for n = {n}", p.len())));
        }
        let coefficients = CoefficientVector::new(alphas, 1.0 - alpha_star)?;
        Ok(Self { decoys, coefficients })
    }

    /// The noise term `η = Σ α_i (wᵀ P_i y)`.
    pub fn eta(&self) -> f64 {
        self.decoys
            .iter()
            .zip(&self.coefficients.alphas)
            .map(|(p, a)| a * standard_count(p) as f64)
            .sum()
    }

    /// The decoy sum `N = Σ α_i P_i`.
    pub fn decoy_sum(&self) -> SquareMatrix {
        let m = self.decoys[0].len();
        let mut out = SquareMatrix::zeros(m);
        for (p, &a) in self.decoys.iter().zip(&self.coefficients.alphas) {
            out.add_scaled_permutation(a, p);
        }
        out
    }
}

/// Everything a client produces. Routing decides which entity sees what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    /// Client index (0-based).
    pub client_id: usize,
    /// Masked matrix `D_t` (matrix variants).
    pub d: Option<SquareMatrix>,
    /// Masked scalar `f_t` (scalar variants).
    pub f: Option<f64>,
    /// Noise term `η_t`.
    pub eta: f64,
    /// Decoy sum `N_t` (matrix variants).
    pub decoy_sum: Option<SquareMatrix>,
}

/// `D = α* M(b) + Σ α_i P_i`, `η`, and `N = Σ α_i P_i`.
pub fn client_mask_full(
    client_id: usize,
    b: &BitVector,
    params: &ProtocolParams,
    randomness: &ClientRandomness,
) -> Result<ClientMessage> {
    check_client(b, params, randomness)?;
    let decoy_sum = randomness.decoy_sum();
    let mut d = decoy_sum.clone();
    d.add_scaled_permutation(params.alpha_star, &encode_bitstream(b));
    Ok(ClientMessage { client_id, d: Some(d), f: None, eta: randomness.eta(), decoy_sum: Some(decoy_sum) })
}

/// `f = α* s + η` and `η`.
pub fn client_mask_compressed(
    client_id: usize,
    b: &BitVector,
    params: &ProtocolParams,
    randomness: &ClientRandomness,
) -> Result<ClientMessage> {
    check_client(b, params, randomness)?;
    let eta = randomness.eta();
    let f = params.alpha_star * b.count_ones() as f64 + eta;
    Ok(ClientMessage { client_id, d: None, f: Some(f), eta, decoy_sum: None })
}

fn check_client(b: &BitVector, params: &ProtocolParams, randomness: &ClientRandomness) -> Result<()> {
    if b.len() != params.n {
        return Err(Error::Dimension(format!("bit vector of length {} for n = {}", b.len(), params.n)));
    }
    if randomness.decoys.iter().any(|p| p.len() != 2 * params.n) {
        return Err(Error::Dimension("decoy size differs from 2n".into()));
    }
    if (randomness.coefficients.total - params.decoy_mass()).abs() > 1e-12 {
        return Err(Error::InvalidParameter("coefficients do not sum to 1 - alpha_star".into()));
    }
    Ok(())
}

/// Applies a fixed shuffle: output `i` is `values[π(i)]`.
pub fn apply_shuffle(values: &[f64], pi: &Permutation) -> Result<Vec<f64>> {
    if pi.len() != values.len() {
        return Err(Error::Dimension(format!("shuffle of size {} for {} values", pi.len(), values.len())));
    }
    Ok(pi.as_slice().iter().map(|&i| values[i]).collect())
}

/// The trusted shuffler: a uniformly random reordering that is not exposed.
pub fn trusted_shuffle<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<f64> {
    let pi = fisher_yates(values.len(), rng);
    pi.as_slice().iter().map(|&i| values[i]).collect()
}

/// How the shuffler obtains its permutation.
#[derive(Debug, Clone)]
pub enum ShuffleSource {
    /// A uniformly random permutation from the given stream.
    Random(RngStream),
    /// A fixed permutation (fixture replay).
    Fixed(Permutation),
}

/// What the aggregator of a two-layer variant sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatorView {
    /// Per-client matrices `D_t` (`TwoLayerFull`).
    pub matrices: Option<Vec<SquareMatrix>>,
    /// Per-client scalars `f_t` (`TwoLayerCompressed`).
    pub f: Option<Vec<f64>>,
    /// `F = Σ_t wᵀ D_t y` or `Σ_t f_t`.
    pub f_total: f64,
}

/// What the noise aggregator of a two-layer variant sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAggregatorView {
    /// Per-client noise terms.
    pub eta: Vec<f64>,
    /// Per-client decoy sums `N_t` (`TwoLayerFull`).
    pub decoy_sums: Option<Vec<SquareMatrix>>,
    /// `H = Σ_t η_t`.
    pub h_total: f64,
}

/// What the server sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerView {
    /// Identity-linked signals plus the shuffled noise list.
    Shuffled {
        /// Per-client matrices (`Full` only).
        matrices: Option<Vec<SquareMatrix>>,
        /// Per-client `f_t`, extracted by the server in `Full`.
        f: Vec<f64>,
        /// Noise terms in shuffler order.
        shuffled_eta: Vec<f64>,
    },
    /// Exactly two reals.
    Aggregate {
        /// `F`.
        f_total: f64,
        /// `H`.
        h_total: f64,
    },
}

impl ServerView {
    /// `(ΣF, ΣH)` as seen by the server.
    pub fn totals(&self) -> (f64, f64) {
        match self {
            ServerView::Shuffled { f, shuffled_eta, .. } => (f.iter().sum(), shuffled_eta.iter().sum()),
            ServerView::Aggregate { f_total, h_total } => (*f_total, *h_total),
        }
    }
}

/// Record of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    /// Public parameters.
    pub params: ProtocolParams,
    /// Server view.
    pub server_view: ServerView,
    /// Aggregator view (two-layer variants).
    pub aggregator_view: Option<AggregatorView>,
    /// Noise aggregator view (two-layer variants).
    pub noise_aggregator_view: Option<NoiseAggregatorView>,
    /// Aggregate recovered by the server.
    pub recovered_s: u64,
    /// Distance of `(F − H)/α*` to the recovered integer.
    pub recovery_margin: f64,
    /// True aggregate, for checking.
    pub ground_truth_s: u64,
}

/// `S = round_half_even((F − H)/α*)` with the guard `|(F − H)/α* − S| < 0.5`.
/// Returns `(S, margin)`.
pub fn recover_aggregate(f_total: f64, h_total: f64, alpha_star: f64) -> Result<(u64, f64)> {
    let q = (f_total - h_total) / alpha_star;
    let s = q.round_ties_even();
    let margin = (q - s).abs();
    if !(margin < 0.5) || s < 0.0 {
        return Err(Error::RoundingGuard { value: q, distance: margin });
    }
    Ok((s as u64, margin))
}

fn check_inputs(inputs: &[BitVector], params: &ProtocolParams) -> Result<()> {
    params.validate()?;
    if inputs.len() != params.k {
        return Err(Error::Dimension(format!("{} inputs for k = {}", inputs.len(), params.k)));
    }
    if let Some(b) = inputs.iter().find(|b| b.len() != params.n) {
        return Err(Error::Dimension(format!("input of length {} for n = {}", b.len(), params.n)));
    }
    Ok(())
}

/// Builds every client's message for the variant in `params`.
pub fn client_messages(
    inputs: &[BitVector],
    params: &ProtocolParams,
    randomness: &[ClientRandomness],
) -> Result<Vec<ClientMessage>> {
    check_inputs(inputs, params)?;
    if randomness.len() != inputs.len() {
        return Err(Error::Dimension(format!("{} randomness records for k = {}", randomness.len(), params.k)));
    }
    inputs
        .iter()
        .zip(randomness)
        .enumerate()
        .map(|(t, (b, r))| {
            if params.variant.sends_matrices() {
                client_mask_full(t, b, params, r)
            } else {
                client_mask_compressed(t, b, params, r)
            }
        })
        .collect()
}

/// Routes client messages to the entities of the variant, runs the
/// integrity check on submitted matrices and recovers `S`.
pub fn aggregate_messages(
    messages: &[ClientMessage],
    params: &ProtocolParams,
    shuffle: ShuffleSource,
    ground_truth_s: u64,
) -> Result<Transcript> {
    params.validate()?;
    if messages.len() != params.k {
        return Err(Error::Dimension(format!("{} messages for k = {}", messages.len(), params.k)));
    }
    let std_pair = standard_extraction_pair(params.n);
    let etas: Vec<f64> = messages.iter().map(|m| m.eta).collect();

    let mut matrices = Vec::new();
    let mut f = Vec::with_capacity(messages.len());
    for (t, msg) in messages.iter().enumerate() {
        if params.variant.sends_matrices() {
            let d = msg.d.clone().ok_or_else(|| Error::Integrity { client: t, reason: "missing matrix".into() })?;
            if d.size() != 2 * params.n {
                return Err(Error::Integrity { client: t, reason: format!("matrix size {}", d.size()) });
            }
            if !is_doubly_stochastic(&d, DS_TOL) {
                return Err(Error::Integrity { client: t, reason: "matrix is not doubly stochastic".into() });
            }
            f.push(bilinear_extract(&d, &std_pair)?);
            matrices.push(d);
        } else {
            f.push(msg.f.ok_or_else(|| Error::Integrity { client: t, reason: "missing scalar".into() })?);
        }
    }

    let (server_view, aggregator_view, noise_aggregator_view) = if params.variant.is_shuffled() {
        let shuffled_eta = match shuffle {
            ShuffleSource::Random(mut rng) => trusted_shuffle(&etas, &mut rng),
            ShuffleSource::Fixed(pi) => apply_shuffle(&etas, &pi)?,
        };
        let matrices = params.variant.sends_matrices().then_some(matrices);
        (ServerView::Shuffled { matrices, f, shuffled_eta }, None, None)
    } else {
        let f_total: f64 = f.iter().sum();
        let h_total: f64 = etas.iter().sum();
        let (agg, noise) = if params.variant.sends_matrices() {
            let sums = messages
                .iter()
                .enumerate()
                .map(|(t, m)| {
                    m.decoy_sum
                        .clone()
                        .ok_or_else(|| Error::Integrity { client: t, reason: "missing decoy sum".into() })
                })
                .collect::<Result<Vec<_>>>()?;
            (
                AggregatorView { matrices: Some(matrices), f: None, f_total },
                NoiseAggregatorView { eta: etas, decoy_sums: Some(sums), h_total },
            )
        } else {
            (
                AggregatorView { matrices: None, f: Some(f), f_total },
                NoiseAggregatorView { eta: etas, decoy_sums: None, h_total },
            )
        };
        (ServerView::Aggregate { f_total, h_total }, Some(agg), Some(noise))
    };

    let (f_total, h_total) = server_view.totals();
    let (recovered_s, recovery_margin) = recover_aggregate(f_total, h_total, params.alpha_star)?;
    Ok(Transcript {
        params: params.clone(),
        server_view,
        aggregator_view,
        noise_aggregator_view,
        recovered_s,
        recovery_margin,
        ground_truth_s,
    })
}

/// Runs the protocol with explicit client randomness.
pub fn run_with_randomness(
    inputs: &[BitVector],
    params: &ProtocolParams,
    randomness: &[ClientRandomness],
    shuffle: ShuffleSource,
) -> Result<Transcript> {
    let messages = client_messages(inputs, params, randomness)?;
    let truth = inputs.iter().map(BitVector::count_ones).sum();
    aggregate_messages(&messages, params, shuffle, truth)
}

/// Draws the randomness of every client: client `t` uses stream `t` of `seed`.
pub fn draw_randomness(params: &ProtocolParams, seed: u64) -> Result<Vec<ClientRandomness>> {
    params.validate()?;
    (0..params.k)
        .map(|t| {
            let mut rng = RngStream::new(seed, t as u64);
            ClientRandomness::draw(params.n, params.decoys, params.alpha_star, params.coefficients, &mut rng)
        })
        .collect()
}

/// Runs the protocol with randomness derived from `seed`.
pub fn run_protocol(inputs: &[BitVector], params: &ProtocolParams, seed: u64) -> Result<Transcript> {
    check_inputs(inputs, params)?;
    let randomness = draw_randomness(params, seed)?;
    run_with_randomness(inputs, params, &randomness, ShuffleSource::Random(RngStream::new(seed, SHUFFLER_STREAM)))
}

/// `k` random bit vectors of length `n` from the input stream of `seed`.
pub fn random_inputs(n: usize, k: usize, seed: u64) -> Result<Vec<BitVector>> {
    let mut rng = RngStream::new(seed, INPUT_STREAM);
    (0..k).map(|_| random_bits(n, &mut rng)).collect()
}

/// Explicit inputs and randomness for replaying a hand-worked run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    /// Client bit vectors.
    pub bits: Vec<BitVector>,
    /// Per-client decoy permutations (1-based index maps in JSON).
    pub decoys: Vec<Vec<Permutation>>,
    /// Per-client coefficients.
    pub coefficients: Vec<Vec<f64>>,
    /// Optional fixed shuffler permutation (1-based in JSON).
    #[serde(default)]
    pub shuffle: Option<Permutation>,
}

impl Fixture {
    /// Number of decoys per client, if uniform across clients.
    pub fn decoys_per_client(&self) -> Option<usize> {
        let k = self.decoys.first()?.len();
        self.decoys.iter().all(|d| d.len() == k).then_some(k)
    }

    /// Client randomness records checked against `params`.
    pub fn randomness(&self, params: &ProtocolParams) -> Result<Vec<ClientRandomness>> {
        if self.bits.len() != params.k || self.decoys.len() != params.k || self.coefficients.len() != params.k {
            return Err(Error::Dimension(format!(
                "fixture has {} inputs, {} decoy lists, {} coefficient lists for k = {}",
                self.bits.len(),
                self.decoys.len(),
                self.coefficients.len(),
                params.k
            )));
        }
        self.decoys
            .iter()
            .zip(&self.coefficients)
            .map(|(d, c)| {
                if d.len() != params.decoys {
                    return Err(Error::Dimension(format!("{} decoys for K = {}", d.len(), params.decoys)));
                }
                ClientRandomness::injected(params.n, params.alpha_star, d.clone(), c.clone())
            })
            .collect()
    }
}

/// Replays a fixture. The shuffler uses the fixture's permutation when given,
/// otherwise a random one from `seed`.
pub fn run_fixture(fixture: &Fixture, params: &ProtocolParams, seed: u64) -> Result<Transcript> {
    let randomness = fixture.randomness(params)?;
    let shuffle = match &fixture.shuffle {
        Some(pi) => ShuffleSource::Fixed(pi.clone()),
        None => ShuffleSource::Random(RngStream::new(seed, SHUFFLER_STREAM)),
    };
    run_with_randomness(&fixture.bits, params, &randomness, shuffle)
}

fn extract_with_pair(transcript: &Transcript, pair: &ExtractionPair) -> Result<f64> {
    let unsupported = || {
        Error::UnsupportedVariant(format!(
            "{:?} transcripts carry no aggregator matrices and decoy sums",
            transcript.params.variant
        ))
    };
    let matrices = transcript.aggregator_view.as_ref().and_then(|v| v.matrices.as_ref()).ok_or_else(unsupported)?;
    let sums = transcript
        .noise_aggregator_view
        .as_ref()
        .and_then(|v| v.decoy_sums.as_ref())
        .ok_or_else(unsupported)?;
    let f: f64 = matrices.iter().map(|d| bilinear_extract(d, pair)).sum::<Result<f64>>()?;
    let h: f64 = sums.iter().map(|n| bilinear_extract(n, pair)).sum::<Result<f64>>()?;
    Ok((f - h) / transcript.params.alpha_star)
}

/// Number of clients with bit `j` set (0-based `j`), from a `TwoLayerFull`
/// transcript.
pub fn extract_perbit_aggregate(transcript: &Transcript, j: usize) -> Result<u64> {
    let pair = perbit_pair(transcript.params.n, j)?;
    let q = extract_with_pair(transcript, &pair)?;
    let s = q.round_ties_even();
    if !((q - s).abs() < 0.5) || s < 0.0 {
        return Err(Error::RoundingGuard { value: q, distance: (q - s).abs() });
    }
    Ok(s as u64)
}

/// `Σ_t Σ_j c_j b_{t,j}` from a `TwoLayerFull` transcript.
pub fn extract_weighted_aggregate(transcript: &Transcript, c: &[f64]) -> Result<f64> {
    if c.len() != transcript.params.n {
        return Err(Error::Dimension(format!("{} weights for n = {}", c.len(), transcript.params.n)));
    }
    extract_with_pair(transcript, &weighted_pair(c)?)
}

/// Row-sum noise functional `(N y)_{2j} = (1 − α*)(R y)_{2j}` of a decoy sum.
pub fn xi_row_form(decoy_sum: &SquareMatrix, j: usize) -> Result<f64> {
    let m = decoy_sum.size();
    if 2 * j + 1 >= m {
        return Err(Error::InvalidParameter(format!("bit index {j} out of range for size {m}")));
    }
    Ok((0..m).filter(|b| b % 2 == 1).map(|b| decoy_sum.get(2 * j, b)).sum())
}

/// Single-entry noise functional `N_{2j, 2j+1} = (1 − α*) R_{2j, 2j+1}` of a
/// decoy sum. This is the per-bit noise subtracted by
/// [`extract_perbit_aggregate`].
pub fn xi_entry_form(decoy_sum: &SquareMatrix, j: usize) -> Result<f64> {
    let m = decoy_sum.size();
    if 2 * j + 1 >= m {
        return Err(Error::InvalidParameter(format!("bit index {j} out of range for size {m}")));
    }
    Ok(decoy_sum.get(2 * j, 2 * j + 1))
}
