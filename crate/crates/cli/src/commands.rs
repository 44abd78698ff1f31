use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use cocycle_core::analytic::{default_energy_grid, epsilon0_estimate};
use cocycle_core::arithmetic::{beta_hat, cf_expand, diophantine_check, BetaHat, DiophantineCheck};
use cocycle_core::avalanche::{ap_blocks, ap_check, APReport};
use cocycle_core::config::parse_model;
use cocycle_core::deviation::{birkhoff_sample, ldt_experiment, LdtConstants};
use cocycle_core::lyapunov::{finite_le, holder_fit, HolderParams, HolderReport};
use cocycle_core::precise::{ap_check_precise, bits_for, cocycle_blocks, Context};
use cocycle_core::{Frequency, JacobiModel, C64};

use crate::args::{ApArgs, BirkhoffArgs, CfArgs, Command, Eps0Args, HolderArgs, LdtArgs, LyapunovArgs};
use crate::CliError;

/// Below this AP bound, `--precision auto` leaves double precision.
const AUTO_PRECISION_BOUND: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// A data file plus what the manifest needs to know about it.
pub struct Output {
    pub body: String,
    pub format: Format,
    pub model_text: Option<String>,
    pub grid_sizes: Vec<usize>,
    pub dropped: Vec<usize>,
    pub summary: Option<Value>,
}

impl Output {
    fn json<T: Serialize>(value: &T) -> Output {
        let mut body = serde_json::to_string_pretty(value).expect("report serialises");
        body.push('\n');
        Output {
            body,
            format: Format::Json,
            model_text: None,
            grid_sizes: Vec::new(),
            dropped: Vec::new(),
            summary: None,
        }
    }

    fn csv(body: String) -> Output {
        Output {
            body,
            format: Format::Csv,
            model_text: None,
            grid_sizes: Vec::new(),
            dropped: Vec::new(),
            summary: None,
        }
    }
}

fn core<E: Into<cocycle_core::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}

fn load_model(path: &Path) -> Result<(JacobiModel, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read model {}: {e}", path.display())))?;
    let model = parse_model(&text).map_err(core)?;
    Ok((model, text))
}

/// Shortest round-trip decimal, switching to exponent form for very large
/// or small magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn run(command: &Command, seed: u64) -> Result<Output, CliError> {
    match command {
        Command::Cf(a) => cf(a),
        Command::Analytic(crate::args::AnalyticCommand::Eps0(a)) => eps0(a),
        Command::Lyapunov(a) => lyapunov(a),
        Command::Holder(a) => holder(a, seed),
        Command::Ldt(a) => ldt(a),
        Command::Birkhoff(a) => birkhoff(a),
        Command::Ap(a) => ap(a),
    }
}

#[derive(Serialize)]
struct BoundCheck {
    s: usize,
    lower: bool,
    upper: bool,
}

#[derive(Serialize)]
struct DiophantineOut {
    #[serde(flatten)]
    check: DiophantineCheck,
    holds: bool,
}

#[derive(Serialize)]
struct CfOut {
    omega: String,
    value: f64,
    quotients: Vec<u64>,
    convergents: Vec<cocycle_core::arithmetic::Convergent>,
    gap_exponents: Vec<f64>,
    beta_hat: Option<BetaHat>,
    terminating: bool,
    truncation: cocycle_core::arithmetic::Truncation,
    exact_bounds: Option<Vec<BoundCheck>>,
    diophantine: Option<DiophantineOut>,
}

fn cf(a: &CfArgs) -> Result<Output, CliError> {
    let f: Frequency = a.omega.parse().map_err(core)?;
    let cf = cf_expand(&f, a.depth).map_err(core)?;
    let exact_bounds = cf.exact_bounds().ok().map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (lower, upper))| BoundCheck {
                s: i + 1,
                lower,
                upper,
            })
            .collect()
    });
    let diophantine = match a.check_diophantine {
        Some((c, alpha, n_max)) => {
            let check = diophantine_check(&cf, c, alpha, n_max).map_err(core)?;
            Some(DiophantineOut {
                holds: check.holds(),
                check,
            })
        }
        None => None,
    };
    Ok(Output::json(&CfOut {
        omega: f.to_string(),
        value: cf.omega,
        beta_hat: beta_hat(&cf).ok(),
        quotients: cf.quotients,
        convergents: cf.convergents,
        gap_exponents: cf.gap_exponents,
        terminating: cf.terminating,
        truncation: cf.truncation,
        exact_bounds,
        diophantine,
    }))
}

fn eps0(a: &Eps0Args) -> Result<Output, CliError> {
    let (model, text) = load_model(&a.model)?;
    let (nx, ny, ne) = a.grid;
    let energies = default_energy_grid(model.v(), a.delta, ne);
    let est = epsilon0_estimate(model.v(), a.delta, energies, nx, ny).map_err(core)?;
    let mut out = Output::json(&est);
    out.model_text = Some(text);
    out.grid_sizes = vec![nx, ny, ne];
    Ok(out)
}

fn lyapunov(a: &LyapunovArgs) -> Result<Output, CliError> {
    let (model, text) = load_model(&a.model)?;
    let energies: Vec<f64> = match (a.scan, a.energy) {
        (Some((lo, hi, k)), _) => {
            if k == 0 {
                return Err(CliError::Usage("--scan needs K >= 1".into()));
            }
            if k == 1 {
                vec![lo]
            } else {
                (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
            }
        }
        (None, Some(e)) => vec![e],
        (None, None) => return Err(CliError::Usage("one of --E or --scan is required".into())),
    };
    let mut body = String::from("E,n,grid,L_n,L_n_a,D_hat,dropped\n");
    let mut dropped = Vec::new();
    for e in energies {
        let est = finite_le(&model, e, a.n, a.grid).map_err(core)?;
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(e),
            est.n,
            est.grid_size,
            fmt_f64(est.l_n),
            fmt_f64(est.l_n_a),
            fmt_f64(est.d_hat),
            est.dropped_orbits
        ));
        dropped.push(est.dropped_orbits);
    }
    let mut out = Output::csv(body);
    out.model_text = Some(text);
    out.grid_sizes = vec![a.grid];
    out.dropped = dropped;
    Ok(out)
}

#[derive(Serialize)]
struct HolderOut {
    seed: u64,
    #[serde(flatten)]
    report: HolderReport,
}

fn holder(a: &HolderArgs, seed: u64) -> Result<Output, CliError> {
    let (model, text) = load_model(&a.model)?;
    let params = HolderParams {
        e_center: a.center,
        radius: a.radius,
        num_pairs: a.pairs,
        n: a.n,
        grid_size: a.grid,
        seed,
        c_bar: a.c_bar,
    };
    let report = holder_fit(&model, &params).map_err(core)?;
    let mut out = Output::json(&HolderOut { seed, report });
    out.model_text = Some(text);
    out.grid_sizes = vec![a.grid];
    Ok(out)
}

fn ldt(a: &LdtArgs) -> Result<Output, CliError> {
    let (model, text) = load_model(&a.model)?;
    let constants = LdtConstants {
        c_abs: a.c_abs,
        mu_guess: a.mu_guess,
    };
    let report = ldt_experiment(&model, a.energy, &a.n, a.delta, a.grid, constants).map_err(core)?;
    let mut out = Output::json(&report);
    out.model_text = Some(text);
    out.grid_sizes = vec![a.grid];
    out.dropped = report.dropped.clone();
    Ok(out)
}

/// `N`, or `qS` for the `S`-th convergent denominator of `ω`.
fn orbit_length(spec: &str, omega: &Frequency) -> Result<u64, CliError> {
    if let Some(s) = spec.strip_prefix('q') {
        let s: usize = s
            .parse()
            .map_err(|_| CliError::Usage(format!("bad --n `{spec}`")))?;
        if s == 0 {
            return Err(CliError::Usage("convergent index starts at 1".into()));
        }
        let cf = cf_expand(omega, s).map_err(core)?;
        let q = cf
            .convergents
            .get(s - 1)
            .ok_or_else(|| CliError::Usage(format!("ω has fewer than {s} convergents")))?
            .q;
        return u64::try_from(q).map_err(|_| CliError::Usage(format!("q_{s} does not fit in 64 bits")));
    }
    spec.parse()
        .map_err(|_| CliError::Usage(format!("bad --n `{spec}`: expected an integer or qS")))
}

fn birkhoff(a: &BirkhoffArgs) -> Result<Output, CliError> {
    let omega: Frequency = a.omega.parse().map_err(core)?;
    let n = orbit_length(&a.n, &omega)?;
    let zeta = C64::new(a.zeta.0, a.zeta.1);
    let sample = birkhoff_sample(zeta, &omega.rotation(), n, a.grid).map_err(core)?;
    let center = n as f64 * sample.i_value;
    let mut body = String::from("x,F_n,deviation\n");
    for (i, v) in sample.values.iter().enumerate() {
        let x = fmt_f64(i as f64 / a.grid as f64);
        match v {
            Some(f) => body.push_str(&format!("{x},{},{}\n", fmt_f64(*f), fmt_f64(f - center))),
            None => body.push_str(&format!("{x},,\n")),
        }
    }
    let mut out = Output::csv(body);
    out.grid_sizes = vec![a.grid];
    out.dropped = vec![sample.dropped];
    out.summary = Some(json!({
        "n": n,
        "i_value": sample.i_value,
        "mean_gap": sample.mean_gap,
        "max_gap": sample.max_gap,
    }));
    Ok(out)
}

#[derive(Serialize)]
struct ApOut {
    #[serde(flatten)]
    report: APReport,
    hypotheses_hold: bool,
    within_bound: bool,
}

fn ap(a: &ApArgs) -> Result<Output, CliError> {
    let (model, text) = load_model(&a.model)?;
    let gauge = a.gauge.into();
    let precise = |bits: usize| -> Result<APReport, CliError> {
        let mut ctx = Context::new(bits);
        let blocks = cocycle_blocks(&mut ctx, &model, a.x, a.energy, a.block_len, a.blocks, gauge)
            .map_err(core)?;
        ap_check_precise(&mut ctx, &blocks, a.c_test).map_err(core)
    };
    let report = match a.precision.as_str() {
        "double" | "auto" => {
            let blocks = ap_blocks(&model, a.x, a.energy, a.block_len, a.blocks, gauge).map_err(core)?;
            let report = ap_check(&blocks, a.c_test).map_err(core)?;
            if a.precision == "auto" && !(report.bound_value >= AUTO_PRECISION_BOUND) {
                let total: f64 = blocks.iter().map(|b| b.log_norm()).sum();
                precise(bits_for(report.log_gamma, total))?
            } else {
                report
            }
        }
        bits => {
            let bits: usize = bits.parse().map_err(|_| {
                CliError::Usage(format!("--precision must be auto, double or a bit count, got `{bits}`"))
            })?;
            precise(bits)?
        }
    };
    let mut out = Output::json(&ApOut {
        hypotheses_hold: report.hypotheses_hold(),
        within_bound: report.within_bound(),
        report,
    });
    out.model_text = Some(text);
    Ok(out)
}
