use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cocycle_core::Gauge;

/// Numerical experiments on quasi-periodic Jacobi and Schrödinger cocycles.
///
/// Every run writes its data file and a JSON run manifest
/// (`<out>.manifest.json`; stderr when writing to stdout). Data files depend
/// only on the arguments, the model file and the program version, never on
/// `--workers`.
///
/// Exit codes: 0 success, 2 invalid arguments or model, 3 numerical
/// degeneracy, 1 I/O failure.
#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version)]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes the output.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for randomised sampling; embedded in the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Continued fraction of a frequency (JSON).
    ///
    /// Fields: quotients a_s, convergents p_s/q_s (s = 1..depth), gap
    /// exponents log(q_{s+1})/q_s, the truncated Liouville exponent
    /// beta_hat (max of the gap exponents), and for exact frequencies the
    /// per-convergent check of 1/(q_s(q_{s+1}+q_s)) < |ω − p_s/q_s| < 1/(q_s q_{s+1}).
    Cf(CfArgs),
    /// Analytic estimates of the potential.
    #[command(subcommand)]
    Analytic(AnalyticCommand),
    /// Finite-scale Lyapunov exponents (CSV).
    ///
    /// Columns: E (energy), n (scale), grid (x-grid points), L_n (grid mean
    /// of (1/n) log‖M_n^u‖, nats per step), L_n_a (same for the analytic
    /// gauge), D_hat (grid mean of log|λ_a a(x)|, nats), dropped (grid points
    /// whose orbit met a zero of a).
    Lyapunov(LyapunovArgs),
    /// Hölder exponent fit of E ↦ L(E) (JSON).
    ///
    /// Each random pair (E1, E2) gets ΔL = |L̃(E1) − L̃(E2)| with
    /// L̃ = 2L_{2n} − L_n; fitted_tau is the slope of log ΔL against
    /// log|E1 − E2|; tau_formula is c̄/(2c̄ + 8·10⁵).
    Holder(HolderArgs),
    /// Large-deviation experiment (JSON).
    ///
    /// measures[i] is the fraction of kept grid points with
    /// |u_n(x) − L_n| > δ at n = n_values[i]; fitted_rate is the slope of
    /// log(measure) against n (per step) over the nonzero entries.
    Ldt(LdtArgs),
    /// Birkhoff sums of the logarithmic kernel (CSV).
    ///
    /// Columns: x (grid point in [0,1)), F_n (Σ_{k<n} log|{x+kω} − ζ|,
    /// nats), deviation (F_n − n I(ζ), nats). Dropped points have empty
    /// value columns.
    Birkhoff(BirkhoffArgs),
    /// Avalanche Principle check on cocycle blocks (JSON).
    ///
    /// Blocks A_j = M_n(x + (j−1)nω), j = 1..m. log_gamma is min log‖A_j‖,
    /// max_gap the largest pair cancellation log‖A_{j+1}‖ + log‖A_j‖ −
    /// log‖A_{j+1}A_j‖, lhs_residual/log_residual the conclusion residual
    /// and bound_value = C_test·m/γ.
    Ap(ApArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CfArgs {
    /// golden, sqrt2m1, p/q, a decimal in (0,1), or cf:a1,a2,...;t
    #[arg(long)]
    pub omega: String,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    /// c,alpha,nmax: check ‖nω‖ ≥ c/(n (log n)^alpha) for 2 ≤ n ≤ nmax.
    #[arg(long, value_parser = parse_diophantine)]
    pub check_diophantine: Option<(f64, f64, u64)>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticCommand {
    /// Grid estimate of ε₀ = inf_E sup_{δ/2<y<δ} inf_x |v(x+iy) − E| (JSON).
    Eps0(Eps0Args),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Eps0Args {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub delta: f64,
    /// Nx,Ny,NE: x-grid, y-grid and energy-grid sizes.
    #[arg(long, value_parser = parse_grid3, default_value = "256,16,64")]
    pub grid: (usize, usize, usize),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LyapunovArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "E", allow_hyphen_values = true, required_unless_present = "scan")]
    pub energy: Option<f64>,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub grid: usize,
    /// Emin,Emax,K: K equispaced energies (overrides --E).
    #[arg(long, value_parser = parse_scan, allow_hyphen_values = true)]
    pub scan: Option<(f64, f64, usize)>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HolderArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub center: f64,
    #[arg(long)]
    pub radius: f64,
    #[arg(long)]
    pub pairs: usize,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// c̄ entering the closed-form exponent.
    #[arg(long, default_value_t = 1.0)]
    pub c_bar: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LdtArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "E", allow_hyphen_values = true)]
    pub energy: f64,
    #[arg(long)]
    pub delta: f64,
    /// Increasing list, at least three entries.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long)]
    pub grid: usize,
    /// c in the bound exp(−(c/μ) δ n).
    #[arg(long, default_value_t = 1.0)]
    pub c_abs: f64,
    /// μ in the bound exp(−(c/μ) δ n).
    #[arg(long, default_value_t = 1.0)]
    pub mu_guess: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BirkhoffArgs {
    /// re,im
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub zeta: (f64, f64),
    #[arg(long)]
    pub omega: String,
    /// Orbit length: an integer, or qS for the S-th convergent denominator.
    #[arg(long)]
    pub n: String,
    #[arg(long)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeArg {
    Raw,
    Analytic,
    Unimodular,
}

impl From<GaugeArg> for Gauge {
    fn from(g: GaugeArg) -> Gauge {
        match g {
            GaugeArg::Raw => Gauge::Raw,
            GaugeArg::Analytic => Gauge::Analytic,
            GaugeArg::Unimodular => Gauge::Unimodular,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ApArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "E", allow_hyphen_values = true)]
    pub energy: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long)]
    pub block_len: u64,
    #[arg(long)]
    pub blocks: usize,
    #[arg(long, value_enum, default_value_t = GaugeArg::Unimodular)]
    pub gauge: GaugeArg,
    #[arg(long, default_value_t = 10.0)]
    pub c_test: f64,
    /// auto, double, or a mantissa width in bits. auto switches to extended
    /// precision when C_test·m/γ is below 1e-13.
    #[arg(long, default_value = "auto")]
    pub precision: String,
}

fn split<const N: usize>(s: &str) -> Result<[&str; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    parts
        .try_into()
        .map_err(|_| format!("expected {N} comma-separated values, got `{s}`"))
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("`{s}` is not a valid number"))
}

fn parse_diophantine(s: &str) -> Result<(f64, f64, u64), String> {
    let [c, a, n] = split::<3>(s)?;
    Ok((num(c)?, num(a)?, num(n)?))
}

fn parse_grid3(s: &str) -> Result<(usize, usize, usize), String> {
    let [a, b, c] = split::<3>(s)?;
    Ok((num(a)?, num(b)?, num(c)?))
}

fn parse_scan(s: &str) -> Result<(f64, f64, usize), String> {
    let [a, b, k] = split::<3>(s)?;
    Ok((num(a)?, num(b)?, num(k)?))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let [a, b] = split::<2>(s)?;
    Ok((num(a)?, num(b)?))
}
