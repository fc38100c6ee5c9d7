//! Server-view simulator and empirical harnesses: two-sample
//! Kolmogorov–Smirnov indistinguishability checks and Hoeffding tails of the
//! decoy-matrix entries.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dp::hoeffding_bound;
use crate::error::{Error, Result};
use crate::linalg::BitVector;
use crate::protocol::{run_protocol, ClientRandomness, ProtocolParams};
use crate::sampling::{fisher_yates, CoefficientMode, RngStream};

/// The server's view `(F, H)` in the two-layer variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSample {
    /// Aggregated signal `F`.
    #[serde(rename = "F")]
    pub f: f64,
    /// Aggregated noise `H`.
    #[serde(rename = "H")]
    pub h: f64,
}

/// `count` fresh noise terms `η` drawn by the client masking process.
pub fn eta_samples<R: Rng + ?Sized>(
    n: usize,
    decoys: usize,
    alpha_star: f64,
    mode: CoefficientMode,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..count).map(|_| Ok(ClientRandomness::draw(n, decoys, alpha_star, mode, rng)?.eta())).collect()
}

/// Simulated server view for aggregate `S`: draws `k` fresh noise terms and
/// returns `(α* S + Ĥ, Ĥ)`. Takes no bit vectors.
pub fn simulate_server_view<R: Rng + ?Sized>(
    s: u64,
    k: usize,
    n: usize,
    decoys: usize,
    alpha_star: f64,
    mode: CoefficientMode,
    rng: &mut R,
) -> Result<ViewSample> {
    if s > (k * n) as u64 {
        return Err(Error::InvalidParameter(format!("S = {s} exceeds k n = {}", k * n)));
    }
    let h: f64 = eta_samples(n, decoys, alpha_star, mode, k, rng)?.iter().sum();
    Ok(ViewSample { f: alpha_star * s as f64 + h, h })
}

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sup |F_1 − F_2|`.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{j>=1} (−1)^{j−1} e^{−2 j² λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test with the effective-size corrected asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("KS test needs two non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let en = (n1 * n2 / (n1 + n2)).sqrt();
    let p_value = kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult { statistic: d, p_value })
}

fn check_two_layer(params: &ProtocolParams) -> Result<()> {
    if params.variant.is_shuffled() {
        return Err(Error::UnsupportedVariant("view harnesses need a two-layer variant".into()));
    }
    params.validate()
}

/// `trials` independent real server views for fixed inputs. Trial seeds are
/// drawn from stream `label` of `seed`.
pub fn real_views(inputs: &[BitVector], params: &ProtocolParams, trials: usize, seed: u64, label: u64) -> Result<Vec<ViewSample>> {
    check_two_layer(params)?;
    let mut master = RngStream::new(seed, label);
    (0..trials)
        .map(|_| {
            let t = run_protocol(inputs, params, master.next_u64())?;
            let (f, h) = t.server_view.totals();
            Ok(ViewSample { f, h })
        })
        .collect()
}

/// KS comparison of server views for two input sets with equal aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndistinguishabilityReport {
    /// KS on `F`.
    pub ks_f: KsResult,
    /// KS on `H`.
    pub ks_h: KsResult,
    /// KS on `F − α* S`.
    pub ks_shifted: KsResult,
    /// Trials per input set.
    pub trials: usize,
}

impl IndistinguishabilityReport {
    /// Smallest of the three p-values.
    pub fn min_p_value(&self) -> f64 {
        self.ks_f.p_value.min(self.ks_h.p_value).min(self.ks_shifted.p_value)
    }
}

/// Runs `trials` two-layer transcripts for each input set and compares the
/// server views. Fails unless both sets have the same aggregate.
pub fn indistinguishability_test(
    inputs_a: &[BitVector],
    inputs_b: &[BitVector],
    params: &ProtocolParams,
    trials: usize,
    seed: u64,
) -> Result<IndistinguishabilityReport> {
    let sa: u64 = inputs_a.iter().map(BitVector::count_ones).sum();
    let sb: u64 = inputs_b.iter().map(BitVector::count_ones).sum();
    if sa != sb {
        return Err(Error::InvalidParameter(format!("aggregates differ: {sa} vs {sb}")));
    }
    let va = real_views(inputs_a, params, trials, seed, 1)?;
    let vb = real_views(inputs_b, params, trials, seed, 2)?;
    let col = |v: &[ViewSample], g: &dyn Fn(&ViewSample) -> f64| v.iter().map(g).collect::<Vec<_>>();
    let shift = params.alpha_star * sa as f64;
    Ok(IndistinguishabilityReport {
        ks_f: ks_two_sample(&col(&va, &|s| s.f), &col(&vb, &|s| s.f))?,
        ks_h: ks_two_sample(&col(&va, &|s| s.h), &col(&vb, &|s| s.h))?,
        ks_shifted: ks_two_sample(&col(&va, &|s| s.f - shift), &col(&vb, &|s| s.f - shift))?,
        trials,
    })
}

/// KS comparison of simulated and real server views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatorReport {
    /// KS on `H` versus `Ĥ`.
    pub ks_h: KsResult,
    /// KS on `F` versus `F̂`.
    pub ks_f: KsResult,
    /// Trials per sample.
    pub trials: usize,
}

/// Compares `trials` real views for `inputs` against `trials` simulator draws
/// given only their aggregate.
pub fn simulator_vs_real(inputs: &[BitVector], params: &ProtocolParams, trials: usize, seed: u64) -> Result<SimulatorReport> {
    let s: u64 = inputs.iter().map(BitVector::count_ones).sum();
    let real = real_views(inputs, params, trials, seed, 3)?;
    let mut rng = RngStream::new(seed, 4);
    let sim = (0..trials)
        .map(|_| simulate_server_view(s, params.k, params.n, params.decoys, params.alpha_star, params.coefficients, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let h = |v: &[ViewSample]| v.iter().map(|x| x.h).collect::<Vec<_>>();
    let f = |v: &[ViewSample]| v.iter().map(|x| x.f).collect::<Vec<_>>();
    Ok(SimulatorReport { ks_h: ks_two_sample(&h(&real), &h(&sim))?, ks_f: ks_two_sample(&f(&real), &f(&sim))?, trials })
}

/// One grid point of [`concentration_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    /// Decoys `K`.
    #[serde(rename = "K")]
    pub decoys: usize,
    /// Deviation radius `r`.
    pub r: f64,
    /// Empirical `Pr[|R_00 − 1/(2n)| > r]`.
    pub empirical_tail: f64,
    /// Binomial standard error of the empirical tail.
    pub std_error: f64,
    /// `2 exp(−2 K r²)`.
    pub hoeffding_bound: f64,
    /// `empirical_tail <= hoeffding_bound + 3 std_error`.
    pub within: bool,
}

/// Empirical tails of the entry `R_00` of uniform-weight decoy matrices
/// `R = (1/K) Σ P_i` against the Hoeffding bound, `trials` draws per `K`.
pub fn concentration_check(n: usize, decoys: &[usize], trials: usize, r_grid: &[f64], seed: u64) -> Result<Vec<ConcentrationRow>> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and trials >= 1".into()));
    }
    let m = 2 * n;
    let centre = 1.0 / m as f64;
    let mut out = Vec::with_capacity(decoys.len() * r_grid.len());
    for (idx, &kk) in decoys.iter().enumerate() {
        if kk == 0 {
            return Err(Error::InvalidParameter("K must be >= 1".into()));
        }
        let mut rng = RngStream::new(seed, idx as u64);
        let deviations: Vec<f64> = (0..trials)
            .map(|_| {
                let hits = (0..kk).filter(|_| fisher_yates(m, &mut rng).image(0) == 0).count();
                (hits as f64 / kk as f64 - centre).abs()
            })
            .collect();
        for &r in r_grid {
            let p = deviations.iter().filter(|&&d| d > r).count() as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let bound = hoeffding_bound(kk, r);
            out.push(ConcentrationRow {
                decoys: kk,
                r,
                empirical_tail: p,
                std_error: se,
                hoeffding_bound: bound,
                within: p <= bound + 3.0 * se,
            });
        }
    }
    Ok(out)
}
