//! Command-line front end: argument parsing, configuration merging,
//! JSON/CSV emission and dispatch to the library.
//!
//! Exit codes: `0` on success, `2` for usage errors (unknown flags, invalid
//! parameter ranges, malformed JSON), `1` for runtime failures. Errors are
//! reported on stderr as a single line `error[usage]: …` or
//! `error[runtime]: …`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    block_threshold_attack, deshuffle_attack, gaussian_map_attack, hungarian_attack, mc_density_estimate,
    DeshuffleMode, McSampling, DESHUFFLE_TOL, ENUMERATE_MAX_K,
};
use crate::dp::{dp_table, Framework, Table, TableSpec};
use crate::error::Error;
use crate::hardness::{
    permanent, permanent_enumerate, residual, support_matrix, support_set, worked_reduction_census, CandidateSpace,
    ENUM_MAX, SUPPORT_TOL,
};
use crate::linalg::{encode_bitstream, BitVector, SquareMatrix};
use crate::protocol::{
    client_mask_full, random_inputs, run_fixture, run_protocol, ClientRandomness, Fixture, ProtocolParams, ServerView,
    Variant,
};
use crate::sampling::{random_bits, CoefficientMode, RngStream};
use crate::sim::{concentration_check, indistinguishability_test, simulator_vs_real};

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or input (exit 2).
    Usage(String),
    /// Failure while running (exit 1).
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Dimension(_) | Error::Json(_) | Error::SizeCap(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "polyveil",
    version,
    about = "Masked-matrix private aggregation laboratory: protocol runs, attacks, hardness oracles, DP accounting and simulator checks"
)]
struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress the stderr summary line.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one protocol instance: clients mask bits as D = α*·M(b) + Σ α_i P_i,
    /// the server recovers S = round((F − H)/α*). Writes a JSON transcript.
    Run(RunArgs),
    /// Measure an attack over repeated trials: de-shuffling by integrality,
    /// Gaussian-approximation MAP, nearest permutation (Hungarian), per-block
    /// thresholding, or Monte Carlo tuple-feasibility density. Writes CSV.
    Attack(AttackArgs),
    /// Exact oracles on a JSON matrix: Ryser permanent, support matrix and
    /// support set, or the 2n = 4, K = 2 reduction census. Writes JSON.
    Oracle(OracleArgs),
    /// Privacy accountant tables: Berry–Esseen, Rényi, zCDP, Gaussian DP,
    /// shuffle amplification, MMSE, or the full-protocol parameter solver.
    /// Writes CSV.
    Dp(DpArgs),
    /// Empirical checks: simulator versus real server views (KS),
    /// matched-aggregate indistinguishability (KS), Hoeffding concentration
    /// of decoy-matrix entries. Writes JSON.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VariantArg {
    Full,
    Compressed,
    TwoLayer,
    TwoLayerCompressed,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Compressed => Variant::Compressed,
            VariantArg::TwoLayer => Variant::TwoLayerFull,
            VariantArg::TwoLayerCompressed => Variant::TwoLayerCompressed,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CoefficientArg {
    Dirichlet,
    Uniform,
}

impl From<CoefficientArg> for CoefficientMode {
    fn from(c: CoefficientArg) -> Self {
        match c {
            CoefficientArg::Dirichlet => CoefficientMode::Dirichlet,
            CoefficientArg::Uniform => CoefficientMode::Uniform,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Protocol variant.
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Bits per client.
    #[arg(long)]
    n: usize,
    /// Number of clients.
    #[arg(long)]
    k: usize,
    /// Decoys per client (defaults to the fixture's decoy count).
    #[arg(long = "K")]
    decoys: Option<usize>,
    /// Signal weight α* in (0,1).
    #[arg(long = "alpha-star")]
    alpha_star: f64,
    /// Coefficient distribution.
    #[arg(long, value_enum)]
    coefficients: Option<CoefficientArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AttackKind {
    Deshuffle,
    GaussianMap,
    Hungarian,
    BlockThreshold,
    McDensity,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SearchArg {
    Full,
    Block,
}

#[derive(Args, Debug)]
struct AttackArgs {
    /// Attack to run.
    #[arg(value_enum)]
    kind: AttackKind,
    /// Bits per client.
    #[arg(long)]
    n: usize,
    /// Number of clients (de-shuffling).
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Decoys per client.
    #[arg(long = "K")]
    decoys: usize,
    /// Signal weight α* in (0,1).
    #[arg(long = "alpha-star")]
    alpha_star: f64,
    /// Number of independent trials.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Candidate space of the Gaussian MAP attack.
    #[arg(long, value_enum, default_value = "block")]
    search: SearchArg,
    /// Tuples sampled per Monte Carlo trial.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OracleKind {
    Permanent,
    Support,
    Census,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Oracle to evaluate.
    #[arg(value_enum)]
    kind: OracleKind,
    /// Matrix file `{"m": …, "rows": [[…]]}`.
    #[arg(long)]
    input: PathBuf,
    /// Signal weight (census).
    #[arg(long = "alpha-star")]
    alpha_star: Option<f64>,
    /// Decoys (census, must be 2).
    #[arg(long = "K", default_value_t = 2)]
    decoys: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FrameworkArg {
    Be,
    Renyi,
    Zcdp,
    Fdp,
    Shuffle,
    Mmse,
    Full,
}

impl From<FrameworkArg> for Framework {
    fn from(f: FrameworkArg) -> Self {
        match f {
            FrameworkArg::Be => Framework::BerryEsseen,
            FrameworkArg::Renyi => Framework::Renyi,
            FrameworkArg::Zcdp => Framework::Zcdp,
            FrameworkArg::Fdp => Framework::Fdp,
            FrameworkArg::Shuffle => Framework::Shuffle,
            FrameworkArg::Mmse => Framework::Mmse,
            FrameworkArg::Full => Framework::FullProtocol,
        }
    }
}

#[derive(Args, Debug)]
struct DpArgs {
    /// Accounting framework.
    #[arg(long, value_enum)]
    framework: FrameworkArg,
    /// Bits per client.
    #[arg(long)]
    n: usize,
    /// Decoys per client.
    #[arg(long = "K")]
    decoys: Option<usize>,
    /// Signal weight; defaults to 1/(4n).
    #[arg(long = "alpha-star")]
    alpha_star: Option<f64>,
    /// Target δ.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Number of clients (shuffle).
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated grid over K (over k for shuffle).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Local ε₀ for shuffle amplification; derived from Gaussian DP when absent.
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Target ε for the full-protocol solver.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VerifyKind {
    Simulator,
    Indistinguishability,
    Concentration,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Check to run.
    #[arg(value_enum)]
    kind: VerifyKind,
    /// Bits per client.
    #[arg(long)]
    n: usize,
    /// Number of clients.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Decoys per client (comma-separated grid for concentration).
    #[arg(long = "K", value_delimiter = ',', required = true)]
    decoys: Vec<usize>,
    /// Signal weight; defaults to 1/(4n).
    #[arg(long = "alpha-star")]
    alpha_star: Option<f64>,
    /// Trials (draws per grid point for concentration).
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Two-layer variant used for real views.
    #[arg(long, value_enum, default_value = "two-layer")]
    variant: VariantArg,
    /// Comma-separated deviation radii (concentration).
    #[arg(long = "r-grid", value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    r_grid: Vec<f64>,
}

/// Configuration file accepted by `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Protocol variant.
    #[serde(default)]
    pub variant: Option<Variant>,
    /// Bits per client.
    #[serde(default)]
    pub n: Option<usize>,
    /// Number of clients.
    #[serde(default)]
    pub k: Option<usize>,
    /// Decoys per client.
    #[serde(default, rename = "K")]
    pub decoys: Option<usize>,
    /// Signal weight.
    #[serde(default)]
    pub alpha_star: Option<f64>,
    /// Master seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Coefficient distribution.
    #[serde(default)]
    pub coefficients: Option<CoefficientMode>,
    /// Explicit inputs and randomness.
    #[serde(default)]
    pub fixture: Option<Fixture>,
}

impl RunConfig {
    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> std::result::Result<Self, Error> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Parses `argv`, dispatches, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprintln!("error[usage]: {}", one_line(&e.render().to_string()));
                    2
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error[usage]: {}", one_line(&m));
            2
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error[runtime]: {}", one_line(&m));
            1
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").trim_start_matches("error: ").to_string()
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run(a) => cmd_run(a, &config, seed, out, cli.quiet),
        Command::Attack(a) => cmd_attack(a, seed, out, cli.quiet),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Dp(a) => cmd_dp(a, out),
        Command::Verify(a) => cmd_verify(a, seed, out, cli.quiet),
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_output(out, text.as_bytes())
}

/// Writes RFC-4180 CSV with a header row and LF line endings.
pub fn write_csv<W: Write>(w: W, headers: &[String], rows: &[Vec<String>]) -> std::result::Result<(), Error> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(headers)?;
    for r in rows {
        wtr.write_record(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Emits a numeric table as CSV, formatting floats with the shortest
/// round-trip representation. Writes to stdout when `path` is `None`.
pub fn emit_table(table: &Table, path: Option<&Path>) -> std::result::Result<(), Error> {
    let rows: Vec<Vec<String>> = table.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, &table.headers, &rows)?;
    match path {
        Some(p) => fs::write(p, buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn merge<T: PartialEq + std::fmt::Debug + Copy>(name: &str, cli: T, cfg: Option<T>) -> CliResult<T> {
    match cfg {
        Some(c) if c != cli => Err(CliError::Usage(format!("config {name} = {c:?} conflicts with --{name} {cli:?}"))),
        _ => Ok(cli),
    }
}

fn cmd_run(a: RunArgs, config: &RunConfig, seed: u64, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    let variant: Variant = a.variant.into();
    let n = merge("n", a.n, config.n)?;
    let k = merge("k", a.k, config.k)?;
    let alpha_star = merge("alpha-star", a.alpha_star, config.alpha_star)?;
    let fixture_k = config.fixture.as_ref().and_then(Fixture::decoys_per_client);
    let decoys = a
        .decoys
        .or(config.decoys)
        .or(fixture_k)
        .ok_or_else(|| CliError::Usage("missing required --K (no fixture to infer it from)".into()))?;
    let mut params = ProtocolParams::new(variant, n, k, decoys, alpha_star);
    params.coefficients = a.coefficients.map(Into::into).or(config.coefficients).unwrap_or_default();
    params.validate()?;
    let transcript = match &config.fixture {
        Some(fx) => run_fixture(fx, &params, seed)?,
        None => run_protocol(&random_inputs(n, k, seed)?, &params, seed)?,
    };
    if !quiet {
        eprintln!("recovered S = {} (ground truth {})", transcript.recovered_s, transcript.ground_truth_s);
    }
    write_json(out, &transcript)
}

fn attack_trial_rng(seed: u64, trial: usize) -> (RngStream, RngStream) {
    (RngStream::new(seed, 2 * trial as u64), RngStream::new(seed, 2 * trial as u64 + 1))
}

fn cmd_attack(a: AttackArgs, seed: u64, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    if !(a.alpha_star > 0.0 && a.alpha_star < 1.0) {
        return Err(CliError::Usage(format!("--alpha-star {} not in (0,1)", a.alpha_star)));
    }
    if a.n == 0 || a.decoys == 0 {
        return Err(CliError::Usage("--n and --K must be >= 1".into()));
    }
    let mut headers: Vec<String> = ["trial", "success", "score"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::with_capacity(a.trials);
    let mut successes = 0usize;
    let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
    match a.kind {
        AttackKind::Deshuffle => {
            headers.extend(["passing_assignments".into(), "mode".into()]);
            let params = ProtocolParams::new(Variant::Compressed, a.n, a.k, a.decoys, a.alpha_star);
            params.validate()?;
            let mode = if a.k <= ENUMERATE_MAX_K { DeshuffleMode::Enumerate } else { DeshuffleMode::Pruned };
            let mut master = RngStream::new(seed, 0);
            for trial in 0..a.trials {
                let s = master.next_u64();
                let inputs = random_inputs(a.n, a.k, s)?;
                let t = run_protocol(&inputs, &params, s)?;
                let ServerView::Shuffled { f, shuffled_eta, .. } = &t.server_view else {
                    return Err(CliError::Runtime("compressed run without a shuffled view".into()));
                };
                let res = deshuffle_attack(f, shuffled_eta, a.alpha_star, a.n, DESHUFFLE_TOL, mode)?;
                let truth: Vec<u64> = inputs.iter().map(BitVector::count_ones).collect();
                let ok = res.correct_recovered(&truth);
                successes += usize::from(ok);
                rows.push(vec![
                    trial.to_string(),
                    flag(ok),
                    (res.passing_assignments.len() as f64).to_string(),
                    res.passing_assignments.len().to_string(),
                    format!("{mode:?}").to_lowercase(),
                ]);
            }
        }
        AttackKind::GaussianMap | AttackKind::Hungarian | AttackKind::BlockThreshold => {
            headers.push("bit_accuracy".into());
            let params = ProtocolParams::new(Variant::TwoLayerFull, a.n, 1, a.decoys, a.alpha_star);
            for trial in 0..a.trials {
                let (mut bits_rng, mut mask_rng) = attack_trial_rng(seed, trial);
                let b = random_bits(a.n, &mut bits_rng)?;
                let r = ClientRandomness::draw(a.n, a.decoys, a.alpha_star, params.coefficients, &mut mask_rng)?;
                let d = client_mask_full(0, &b, &params, &r)?.d.expect("matrix variant");
                let outcome = match a.kind {
                    AttackKind::GaussianMap => {
                        let space = match a.search {
                            SearchArg::Full => CandidateSpace::FullEnum,
                            SearchArg::Block => CandidateSpace::BlockEnum,
                        };
                        gaussian_map_attack(&d, a.alpha_star, a.n, a.decoys, space)?
                    }
                    AttackKind::Hungarian => hungarian_attack(&d),
                    _ => block_threshold_attack(&d, a.alpha_star)?,
                };
                let ok = outcome.success(&b);
                successes += usize::from(ok);
                rows.push(vec![
                    trial.to_string(),
                    flag(ok),
                    outcome.score.to_string(),
                    outcome.bit_accuracy(&b)?.to_string(),
                ]);
            }
        }
        AttackKind::McDensity => {
            headers.extend(["hit_count".into(), "samples".into(), "wilson_low".into(), "wilson_high".into()]);
            let params = ProtocolParams::new(Variant::TwoLayerFull, a.n, 1, a.decoys, a.alpha_star);
            for trial in 0..a.trials {
                let (mut bits_rng, mut mask_rng) = attack_trial_rng(seed, trial);
                let b = random_bits(a.n, &mut bits_rng)?;
                let r = ClientRandomness::draw(a.n, a.decoys, a.alpha_star, params.coefficients, &mut mask_rng)?;
                let d = client_mask_full(0, &b, &params, &r)?.d.expect("matrix variant");
                let target = residual(&d, &encode_bitstream(&b), a.alpha_star)?;
                let res = mc_density_estimate(
                    &target,
                    a.decoys,
                    a.alpha_star,
                    McSampling::Uniform { samples: a.samples },
                    1e-8,
                    &mut mask_rng,
                )?;
                let ok = res.hit_count > 0;
                successes += usize::from(ok);
                rows.push(vec![
                    trial.to_string(),
                    flag(ok),
                    res.hit_rate.to_string(),
                    res.hit_count.to_string(),
                    res.trials.to_string(),
                    res.wilson_low.to_string(),
                    res.wilson_high.to_string(),
                ]);
            }
        }
    }
    if !quiet {
        eprintln!("{successes}/{} successful trials", a.trials);
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, &headers, &rows)?;
    write_output(out, &buf)
}

#[derive(Serialize)]
struct PermanentReport {
    m: usize,
    permanent: f64,
    enumeration: Option<f64>,
}

#[derive(Serialize)]
struct SupportReport {
    support_matrix: SquareMatrix,
    permanent: f64,
    support_size: Option<usize>,
    support_set: Option<Vec<crate::linalg::Permutation>>,
}

fn cmd_oracle(a: OracleArgs, out: Option<&Path>) -> CliResult<()> {
    let text = fs::read_to_string(&a.input)?;
    let matrix: SquareMatrix = serde_json::from_str(&text).map_err(Error::from)?;
    match a.kind {
        OracleKind::Permanent => {
            let enumeration = (matrix.size() <= ENUM_MAX).then(|| permanent_enumerate(&matrix)).transpose()?;
            write_json(out, &PermanentReport { m: matrix.size(), permanent: permanent(&matrix)?, enumeration })
        }
        OracleKind::Support => {
            let sm = support_matrix(&matrix, SUPPORT_TOL);
            let set = (matrix.size() <= ENUM_MAX).then(|| support_set(&matrix, SUPPORT_TOL)).transpose()?;
            write_json(
                out,
                &SupportReport {
                    permanent: permanent(&sm)?,
                    support_matrix: sm,
                    support_size: set.as_ref().map(Vec::len),
                    support_set: set,
                },
            )
        }
        OracleKind::Census => {
            let alpha = a.alpha_star.ok_or_else(|| CliError::Usage("census requires --alpha-star".into()))?;
            write_json(out, &worked_reduction_census(&matrix, alpha, a.decoys)?)
        }
    }
}

fn cmd_dp(a: DpArgs, out: Option<&Path>) -> CliResult<()> {
    let framework: Framework = a.framework.into();
    let grid = match (&a.grid, framework) {
        (Some(g), _) => g.clone(),
        (None, Framework::Shuffle) => vec![a.k.ok_or_else(|| CliError::Usage("shuffle needs --k or --grid".into()))?],
        (None, Framework::FullProtocol) => vec![],
        (None, _) => vec![a.decoys.ok_or_else(|| CliError::Usage("missing --K or --grid".into()))?],
    };
    let spec = TableSpec {
        framework,
        n: a.n,
        alpha_star: a.alpha_star,
        delta: a.delta,
        grid,
        decoys: a.decoys.unwrap_or(9),
        epsilon0: a.epsilon0,
        epsilon: a.epsilon,
    };
    let table = dp_table(&spec)?;
    emit_table(&table, out).map_err(CliError::from)
}

fn spread_inputs(n: usize, k: usize, s: u64) -> std::result::Result<Vec<BitVector>, Error> {
    let mut bits = vec![vec![false; n]; k];
    for i in 0..s as usize {
        bits[i % k][i / k] = true;
    }
    bits.into_iter().map(BitVector::new).collect()
}

fn packed_inputs(n: usize, k: usize, s: u64) -> std::result::Result<Vec<BitVector>, Error> {
    let mut bits = vec![vec![false; n]; k];
    for i in 0..s as usize {
        bits[i / n][i % n] = true;
    }
    bits.into_iter().map(BitVector::new).collect()
}

#[derive(Serialize)]
struct VerifyReport<T: Serialize> {
    check: &'static str,
    pass: bool,
    threshold: f64,
    result: T,
}

fn cmd_verify(a: VerifyArgs, seed: u64, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    const P_THRESHOLD: f64 = 1e-3;
    let alpha = a.alpha_star.unwrap_or(1.0 / (4.0 * a.n as f64));
    let variant: Variant = a.variant.into();
    let first_k = *a.decoys.first().ok_or_else(|| CliError::Usage("missing --K".into()))?;
    let mut params = ProtocolParams::new(variant, a.n, a.k, first_k, alpha);
    params.coefficients = CoefficientMode::Dirichlet;
    let pass = match a.kind {
        VerifyKind::Simulator => {
            let inputs = random_inputs(a.n, a.k, seed)?;
            let r = simulator_vs_real(&inputs, &params, a.trials, seed)?;
            let pass = r.ks_h.p_value > P_THRESHOLD && r.ks_f.p_value > P_THRESHOLD;
            write_json(out, &VerifyReport { check: "simulator", pass, threshold: P_THRESHOLD, result: r })?;
            pass
        }
        VerifyKind::Indistinguishability => {
            let s = random_inputs(a.n, a.k, seed)?.iter().map(BitVector::count_ones).sum();
            let ia = packed_inputs(a.n, a.k, s)?;
            let ib = spread_inputs(a.n, a.k, s)?;
            let r = indistinguishability_test(&ia, &ib, &params, a.trials, seed)?;
            let pass = r.min_p_value() > P_THRESHOLD;
            write_json(out, &VerifyReport { check: "indistinguishability", pass, threshold: P_THRESHOLD, result: r })?;
            pass
        }
        VerifyKind::Concentration => {
            let rows = concentration_check(a.n, &a.decoys, a.trials, &a.r_grid, seed)?;
            let pass = rows.iter().all(|r| r.within);
            write_json(out, &VerifyReport { check: "concentration", pass, threshold: 3.0, result: rows })?;
            pass
        }
    };
    if !quiet {
        eprintln!("verify: {}", if pass { "pass" } else { "fail" });
    }
    Ok(())
}
