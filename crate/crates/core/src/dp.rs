//! Closed-form privacy accountant for the masking noise `η`.
//!
//! With `K` uniform decoys and equal weights, `η = (1 − α*)/K · Σ X_i` where
//! `X_i = wᵀ P_i y` counts the blocks of a uniform permutation carrying a 1 at
//! `(2j, 2j+1)`. Its variance is `Var[X] = 1/4 + (n − 1)/(2(2n − 1))`.
//!
//! Two noise scales appear below:
//!
//! * the exact scale `σ_η = (1 − α*) √(Var[X]/K)`, used for the Berry–Esseen
//!   bound, the SNR and the MMSE ratio;
//! * the Gaussian-channel scale `(1 − α*)/(2√K)`, i.e. `Var[X] = 1/4`, used
//!   by the Rényi, zCDP and Gaussian-DP curves.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Berry–Esseen constant.
pub const C_BE: f64 = 0.5;
/// Lower clamp on the Rényi order.
pub const RENYI_MIN_ORDER: f64 = 1.0 + 1e-6;

/// Accounting framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Framework {
    /// Berry–Esseen plus log-Lipschitz bound.
    BerryEsseen,
    /// Rényi DP with optimized order.
    Renyi,
    /// Zero-concentrated DP.
    Zcdp,
    /// Gaussian differential privacy.
    Fdp,
    /// Shuffle-model amplification.
    Shuffle,
    /// Minimum mean squared error ratio.
    Mmse,
    /// Full-protocol parameter solver.
    FullProtocol,
}

/// Inputs of one accountant evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpQuery {
    /// Bits per client.
    pub n: usize,
    /// Decoys per client.
    #[serde(rename = "K")]
    pub decoys: usize,
    /// Signal weight.
    pub alpha_star: f64,
    /// Target `δ`.
    pub delta: f64,
    /// Number of clients (shuffle amplification).
    pub k: usize,
}

impl DpQuery {
    /// Checks `n, K, k >= 1`, `α* ∈ (0,1)`, `δ ∈ (0,1)`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.decoys == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("n, K and k must be >= 1".into()));
        }
        check_unit("alpha_star", self.alpha_star)?;
        check_unit("delta", self.delta)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} = {v} not in (0,1)")));
    }
    Ok(())
}

/// `Var[X_i] = 1/4 + (n − 1)/(2(2n − 1))`.
pub fn var_x(n: usize) -> f64 {
    let n = n as f64;
    0.25 + (n - 1.0) / (2.0 * (2.0 * n - 1.0))
}

/// Exact noise scale `σ_η = (1 − α*) √(Var[X]/K)`.
pub fn sigma_eta(n: usize, decoys: usize, alpha_star: f64) -> f64 {
    (1.0 - alpha_star) * (var_x(n) / decoys as f64).sqrt()
}

/// Gaussian-channel noise scale `(1 − α*)/(2√K)`.
pub fn sigma_eta_gaussian(decoys: usize, alpha_star: f64) -> f64 {
    (1.0 - alpha_star) / (2.0 * (decoys as f64).sqrt())
}

/// Per-entry scale of the decoy matrix, `σ_K = √((2n − 1)/((2n)² K))`.
pub fn sigma_k(n: usize, decoys: usize) -> f64 {
    let m = 2.0 * n as f64;
    ((m - 1.0) / (m * m * decoys as f64)).sqrt()
}

/// Signal-to-noise ratios of the masked outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSuite {
    /// Scalar SNR `α* n / σ_η`.
    pub snr: f64,
    /// Per-entry SNR `α* / ((1 − α*) σ_K)`.
    pub snr_entry: f64,
    /// Whole-matrix SNR `α*² / (2n σ_K²)`.
    pub snr_matrix: f64,
    /// Channel SNR `α*² (n/4) / σ_η²`.
    pub snr_channel: f64,
}

/// Evaluates the four SNR closed forms with the exact `σ_η`.
pub fn snr_suite(n: usize, decoys: usize, alpha_star: f64) -> SnrSuite {
    let s_eta = sigma_eta(n, decoys, alpha_star);
    let s_k = sigma_k(n, decoys);
    let nf = n as f64;
    SnrSuite {
        snr: alpha_star * nf / s_eta,
        snr_entry: alpha_star / ((1.0 - alpha_star) * s_k),
        snr_matrix: alpha_star * alpha_star / (2.0 * nf * s_k * s_k),
        snr_channel: alpha_star * alpha_star * (nf / 4.0) / (s_eta * s_eta),
    }
}

/// Berry–Esseen bound components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseen {
    /// Privacy loss `ε`.
    pub epsilon: f64,
    /// CLT approximation error `β = C_BE · 2√n / √K`.
    pub beta: f64,
    /// Tail quantile `z = √(2 ln(4/δ))`.
    pub z: f64,
}

/// `ε = (α* n)²/(2σ_η²) + α* n z/σ_η + 2β` with the exact `σ_η`.
pub fn epsilon_berry_esseen(n: usize, decoys: usize, alpha_star: f64, delta: f64) -> Result<BerryEsseen> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("the Berry-Esseen bound needs n >= 4, got {n}")));
    }
    check_unit("alpha_star", alpha_star)?;
    check_unit("delta", delta)?;
    let s = sigma_eta(n, decoys, alpha_star);
    let z = (2.0 * (4.0 / delta).ln()).sqrt();
    let beta = C_BE * 2.0 * (n as f64).sqrt() / (decoys as f64).sqrt();
    let shift = alpha_star * n as f64;
    let epsilon = shift * shift / (2.0 * s * s) + shift * z / s + 2.0 * beta;
    Ok(BerryEsseen { epsilon, beta, z })
}

/// Rényi curve slope `ρ = (α* n)²/(2σ²) = 2α*² n² K/(1 − α*)²` of the
/// Gaussian channel.
fn gaussian_rho(n: usize, decoys: usize, alpha_star: f64) -> f64 {
    let s = sigma_eta_gaussian(decoys, alpha_star);
    let shift = alpha_star * n as f64;
    shift * shift / (2.0 * s * s)
}

/// `ε_α = α · 2α*² n² K/(1 − α*)²`, the order-`α` Rényi divergence between
/// the two shifted Gaussians.
pub fn renyi_epsilon(n: usize, decoys: usize, alpha_star: f64, order: f64) -> Result<f64> {
    if !(order > 1.0) {
        return Err(Error::InvalidParameter(format!("Renyi order {order} must exceed 1")));
    }
    check_unit("alpha_star", alpha_star)?;
    Ok(order * gaussian_rho(n, decoys, alpha_star))
}

/// Rényi divergence `α Δ²/(2σ²)` between `N(0, σ²)` and `N(Δ, σ²)`.
pub fn renyi_gaussian_divergence(shift: f64, sigma: f64, order: f64) -> f64 {
    order * shift * shift / (2.0 * sigma * sigma)
}

/// Optimized Rényi-to-DP conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiConversion {
    /// Minimizing order `α_opt = 1 + √(ln(1/δ)/ρ)`, clamped.
    pub alpha_opt: f64,
    /// `ε_{α_opt}`.
    pub epsilon_alpha: f64,
    /// `ε = ε_α + ln(1/δ)/(α − 1)` at `α_opt`.
    pub epsilon: f64,
}

/// Minimizes `ε_α + ln(1/δ)/(α − 1)` over `α > 1` analytically.
pub fn renyi_to_dp(n: usize, decoys: usize, alpha_star: f64, delta: f64) -> Result<RenyiConversion> {
    check_unit("alpha_star", alpha_star)?;
    check_unit("delta", delta)?;
    let rho = gaussian_rho(n, decoys, alpha_star);
    let l = (1.0 / delta).ln();
    let alpha_opt = (1.0 + (l / rho).sqrt()).max(RENYI_MIN_ORDER);
    let epsilon_alpha = alpha_opt * rho;
    Ok(RenyiConversion { alpha_opt, epsilon_alpha, epsilon: epsilon_alpha + l / (alpha_opt - 1.0) })
}

/// zCDP parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zcdp {
    /// `ρ = (α* n)²/(2σ²)`.
    pub rho: f64,
    /// `ε = ρ + 2√(ρ ln(1/δ))`.
    pub epsilon: f64,
}

/// `ρ`-zCDP of the Gaussian channel and its `(ε, δ)` conversion.
pub fn zcdp(n: usize, decoys: usize, alpha_star: f64, delta: f64) -> Result<Zcdp> {
    check_unit("alpha_star", alpha_star)?;
    check_unit("delta", delta)?;
    let rho = gaussian_rho(n, decoys, alpha_star);
    Ok(Zcdp { rho, epsilon: rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt() })
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `μ = 2α* n √K/(1 − α*)`.
pub fn gdp_mu(n: usize, decoys: usize, alpha_star: f64) -> f64 {
    2.0 * alpha_star * n as f64 * (decoys as f64).sqrt() / (1.0 - alpha_star)
}

/// `δ(ε) = Φ(−ε/μ + μ/2) − e^ε Φ(−ε/μ − μ/2)`.
pub fn gdp_delta(epsilon: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be positive")));
    }
    Ok((normal_cdf(-epsilon / mu + mu / 2.0) - epsilon.exp() * normal_cdf(-epsilon / mu - mu / 2.0)).max(0.0))
}

/// Solves `δ(ε) = δ` for `ε >= 0` by bisection.
pub fn gdp_epsilon(delta: f64, mu: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    let mut lo = 0.0;
    if gdp_delta(lo, mu)? <= delta {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while gdp_delta(hi, mu)? > delta {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible(format!("no epsilon with delta <= {delta} for mu = {mu}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gdp_delta(mid, mu)? > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `ε = ln(1 + (e^{ε₀} − 1)/(e^{ε₀} + 1) · √(14 ln(2/δ)/k))`.
pub fn shuffle_amplify(epsilon0: f64, k: usize, delta: f64) -> Result<f64> {
    if k == 0 || !(epsilon0 >= 0.0) {
        return Err(Error::InvalidParameter("need k >= 1 and epsilon0 >= 0".into()));
    }
    check_unit("delta", delta)?;
    let t = (epsilon0 / 2.0).tanh();
    Ok((t * (14.0 * (2.0 / delta).ln() / k as f64).sqrt()).ln_1p())
}

/// `1/(1 + snr_channel)`.
pub fn mmse_ratio(n: usize, decoys: usize, alpha_star: f64) -> f64 {
    1.0 / (1.0 + snr_suite(n, decoys, alpha_star).snr_channel)
}

/// Output of the full-protocol parameter solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullProtocolDp {
    /// Decoys `K = (2n − 1)² + 1`.
    #[serde(rename = "K")]
    pub decoys: usize,
    /// High-probability radius `r = √(ln(16n²/δ)/(2K))`.
    pub r: f64,
    /// `σ_K`.
    pub sigma_k: f64,
    /// Log-Lipschitz constant `L_r = 4n² r/σ_K²`.
    pub l_r: f64,
    /// Density approximation error `β = 1/√n`.
    pub beta: f64,
    /// `α* = (ε − 2β)/L_r`.
    pub alpha_star: f64,
    /// Per-entry SNR at that `α*`.
    pub snr_entry: f64,
}

/// Chooses `K` and `α*` for target `(ε, δ)` in the matrix-revealing variant.
pub fn full_protocol_dp(n: usize, epsilon: f64, delta: f64) -> Result<FullProtocolDp> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("the solver needs n >= 4, got {n}")));
    }
    check_unit("delta", delta)?;
    let nf = n as f64;
    let beta = 1.0 / nf.sqrt();
    if !(epsilon > 2.0 * beta) {
        return Err(Error::Infeasible(format!("epsilon {epsilon} <= 2 beta = {}", 2.0 * beta)));
    }
    let decoys = (2 * n - 1) * (2 * n - 1) + 1;
    let kf = decoys as f64;
    let r = ((16.0 * nf * nf / delta).ln() / (2.0 * kf)).sqrt();
    let s_k = sigma_k(n, decoys);
    let l_r = 4.0 * nf * nf * r / (s_k * s_k);
    let alpha_star = (epsilon - 2.0 * beta) / l_r;
    let snr_entry = alpha_star / ((1.0 - alpha_star) * s_k);
    Ok(FullProtocolDp { decoys, r, sigma_k: s_k, l_r, beta, alpha_star, snr_entry })
}

/// Two-sided Hoeffding bound `2 exp(−2 K r²)` on `|R_ab − 1/(2n)| > r`.
pub fn hoeffding_bound(decoys: usize, r: f64) -> f64 {
    2.0 * (-2.0 * decoys as f64 * r * r).exp()
}

/// Bundled accountant output for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpReport {
    /// Privacy loss.
    pub epsilon: Option<f64>,
    /// Target `δ`.
    pub delta: f64,
    /// Gaussian-DP parameter.
    pub mu: Option<f64>,
    /// zCDP parameter.
    pub rho: Option<f64>,
    /// Optimal Rényi order.
    pub alpha_order: Option<f64>,
    /// Exact noise scale.
    pub sigma_eta: f64,
    /// Scalar SNR.
    pub snr: f64,
    /// Channel SNR.
    pub snr_channel: f64,
    /// MMSE ratio.
    pub mmse_ratio: f64,
    /// CLT error.
    pub beta: Option<f64>,
    /// Further named values.
    pub diagnostics: Vec<(String, f64)>,
}

/// Evaluates one framework at one query point.
pub fn report(framework: Framework, q: &DpQuery) -> Result<DpReport> {
    q.validate()?;
    let snr = snr_suite(q.n, q.decoys, q.alpha_star);
    let mut out = DpReport {
        epsilon: None,
        delta: q.delta,
        mu: None,
        rho: None,
        alpha_order: None,
        sigma_eta: sigma_eta(q.n, q.decoys, q.alpha_star),
        snr: snr.snr,
        snr_channel: snr.snr_channel,
        mmse_ratio: mmse_ratio(q.n, q.decoys, q.alpha_star),
        beta: None,
        diagnostics: vec![("snr_entry".into(), snr.snr_entry), ("snr_matrix".into(), snr.snr_matrix)],
    };
    match framework {
        Framework::BerryEsseen => {
            let be = epsilon_berry_esseen(q.n, q.decoys, q.alpha_star, q.delta)?;
            out.epsilon = Some(be.epsilon);
            out.beta = Some(be.beta);
            out.diagnostics.push(("z".into(), be.z));
        }
        Framework::Renyi => {
            let r = renyi_to_dp(q.n, q.decoys, q.alpha_star, q.delta)?;
            out.epsilon = Some(r.epsilon);
            out.alpha_order = Some(r.alpha_opt);
            out.diagnostics.push(("epsilon_alpha".into(), r.epsilon_alpha));
        }
        Framework::Zcdp => {
            let z = zcdp(q.n, q.decoys, q.alpha_star, q.delta)?;
            out.epsilon = Some(z.epsilon);
            out.rho = Some(z.rho);
        }
        Framework::Fdp => {
            let mu = gdp_mu(q.n, q.decoys, q.alpha_star);
            out.mu = Some(mu);
            out.epsilon = Some(gdp_epsilon(q.delta, mu)?);
        }
        Framework::Shuffle => {
            let mu = gdp_mu(q.n, q.decoys, q.alpha_star);
            let eps0 = gdp_epsilon(q.delta, mu)?;
            out.mu = Some(mu);
            out.diagnostics.push(("epsilon0".into(), eps0));
            out.epsilon = Some(shuffle_amplify(eps0, q.k, q.delta)?);
        }
        Framework::Mmse => {}
        Framework::FullProtocol => {
            return Err(Error::InvalidParameter("use full_protocol_dp for the full-protocol solver".into()));
        }
    }
    Ok(out)
}

/// A table of named numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    /// Column names.
    pub headers: Vec<String>,
    /// Rows of values.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Value of column `name` in row `i`.
    pub fn value(&self, i: usize, name: &str) -> Option<f64> {
        let c = self.headers.iter().position(|h| h == name)?;
        self.rows.get(i).map(|r| r[c])
    }
}

/// Grid specification for [`dp_table`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    /// Framework.
    pub framework: Framework,
    /// Bits per client.
    pub n: usize,
    /// Signal weight; `None` means `1/(4n)`.
    pub alpha_star: Option<f64>,
    /// Target `δ`.
    pub delta: f64,
    /// Grid over `K` (over `k` for shuffle).
    pub grid: Vec<usize>,
    /// Decoys for the shuffle framework.
    #[serde(rename = "K")]
    pub decoys: usize,
    /// Local `ε₀` for the shuffle framework; `None` derives it from Gaussian DP.
    pub epsilon0: Option<f64>,
    /// Target `ε` for the full-protocol solver.
    pub epsilon: f64,
}

/// Evaluates a framework over a grid.
pub fn dp_table(spec: &TableSpec) -> Result<Table> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let a = spec.alpha_star.unwrap_or(1.0 / (4.0 * n as f64));
    let d = spec.delta;
    let h = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut rows = Vec::with_capacity(spec.grid.len());
    let headers = match spec.framework {
        Framework::BerryEsseen => {
            for &kk in &spec.grid {
                let be = epsilon_berry_esseen(n, kk, a, d)?;
                let s = snr_suite(n, kk, a);
                rows.push(vec![kk as f64, sigma_eta(n, kk, a), s.snr, be.beta, be.epsilon, mmse_ratio(n, kk, a)]);
            }
            h(&["K", "sigma_eta", "snr", "beta", "epsilon", "mmse_ratio"])
        }
        Framework::Renyi => {
            for &kk in &spec.grid {
                let r = renyi_to_dp(n, kk, a, d)?;
                rows.push(vec![kk as f64, r.alpha_opt, r.epsilon_alpha, r.epsilon]);
            }
            h(&["K", "alpha_opt", "epsilon_alpha", "epsilon"])
        }
        Framework::Zcdp => {
            for &kk in &spec.grid {
                let z = zcdp(n, kk, a, d)?;
                rows.push(vec![kk as f64, z.rho, z.epsilon]);
            }
            h(&["K", "rho", "epsilon"])
        }
        Framework::Fdp => {
            for &kk in &spec.grid {
                let mu = gdp_mu(n, kk, a);
                rows.push(vec![kk as f64, mu, d, gdp_epsilon(d, mu)?]);
            }
            h(&["K", "mu", "delta", "epsilon"])
        }
        Framework::Shuffle => {
            let eps0 = match spec.epsilon0 {
                Some(e) => e,
                None => gdp_epsilon(d, gdp_mu(n, spec.decoys, a))?,
            };
            for &k in &spec.grid {
                rows.push(vec![k as f64, eps0, d, shuffle_amplify(eps0, k, d)?]);
            }
            h(&["k", "epsilon0", "delta", "epsilon"])
        }
        Framework::Mmse => {
            for &kk in &spec.grid {
                let s = snr_suite(n, kk, a);
                rows.push(vec![kk as f64, s.snr_channel, mmse_ratio(n, kk, a)]);
            }
            h(&["K", "snr_channel", "mmse_ratio"])
        }
        Framework::FullProtocol => {
            let f = full_protocol_dp(n, spec.epsilon, d)?;
            rows.push(vec![
                n as f64,
                spec.epsilon,
                d,
                f.decoys as f64,
                f.r,
                f.sigma_k,
                f.l_r,
                f.beta,
                f.alpha_star,
                f.snr_entry,
            ]);
            h(&["n", "epsilon", "delta", "K", "r", "sigma_K", "L_r", "beta", "alpha_star", "snr_entry"])
        }
    };
    Ok(Table { headers, rows })
}
