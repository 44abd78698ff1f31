//! Birkhoff sums of the logarithmic kernel and large deviation experiments.
//!
//! Measures of deviation sets are counting measures on the equispaced grid
//! `i / N`. Grid points whose orbit passes within [`EXCLUSION_RADIUS`] of a
//! logarithmic singularity are dropped and counted.

use serde::Serialize;

use crate::analytic::log_potential_i;
use crate::arithmetic::Rotation;
use crate::cocycle::{orbit_zero_scan, scaled_product, Gauge, JacobiModel};
use crate::lyapunov::LyapunovError;
use crate::reduce::{ordered_map, pairwise_mean, pairwise_sum};
use crate::stats::linear_fit;
use crate::C64;

/// Below this distance a single kernel term is treated as `−∞`.
pub const SINGULAR_TOL: f64 = 1e-300;

/// Grid points whose orbit comes this close to a singularity are dropped.
pub const EXCLUSION_RADIUS: f64 = 1e-12;

/// Smallest grid accepted by [`deviation_measure`].
pub const MIN_DEVIATION_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("orbit point {k} hits the singularity")]
    Singular { k: u64 },
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
}

/// `F_{n,ζ}(x) = Σ_{0≤k<n} log|{x + kω} − ζ|`, summed in order of `k`.
pub fn birkhoff_sum(zeta: C64, x: f64, n: u64, rotation: &Rotation) -> Result<f64, DeviationError> {
    let mut acc = 0.0;
    for k in 0..n {
        let r = (C64::new(rotation.point(x, k), 0.0) - zeta).norm();
        if r < SINGULAR_TOL {
            return Err(DeviationError::Singular { k });
        }
        acc += r.ln();
    }
    Ok(acc)
}

/// Distance from `ζ` to the nearest of the first `n` orbit points.
fn orbit_gap(zeta: C64, x: f64, n: u64, rotation: &Rotation) -> f64 {
    (0..n)
        .map(|k| (C64::new(rotation.point(x, k), 0.0) - zeta).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Rational sum with the nearest point removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcludedSum {
    pub q: u64,
    /// `Σ_{j≠j₀} log|θ + j/q − ζ|`.
    pub sum: f64,
    /// `|sum − q I(ζ)|`.
    pub residual: f64,
    /// `residual / log q`.
    pub normalized: f64,
    pub excluded_index: u64,
    pub excluded_distance: f64,
}

/// The orbit `{x + j/q}` is the set `θ + j/q`, `θ = {qx}/q`, so the sum only
/// depends on `x` modulo `1/q`. The single point nearest to `ζ` (smallest
/// index on ties) is dropped.
pub fn excluded_rational_sum(x: f64, zeta: C64, q: u64) -> Result<ExcludedSum, DeviationError> {
    if q < 2 {
        return Err(DeviationError::InvalidInput(format!("q = {q} must be at least 2")));
    }
    let qf = q as f64;
    let t = x * qf;
    let theta = (t - t.floor()) / qf;
    let dist = |j: u64| (C64::new(theta + j as f64 / qf, 0.0) - zeta).norm();
    let mut j0 = 0;
    let mut best = dist(0);
    for j in 1..q {
        let d = dist(j);
        if d < best {
            best = d;
            j0 = j;
        }
    }
    let mut sum = 0.0;
    for j in (0..q).filter(|&j| j != j0) {
        sum += dist(j).ln();
    }
    let residual = (sum - qf * log_potential_i(zeta)).abs();
    Ok(ExcludedSum {
        q,
        sum,
        residual,
        normalized: residual / qf.ln(),
        excluded_index: j0,
        excluded_distance: best,
    })
}

/// `F_{n,ζ}` on the grid `i / N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffSumSample {
    pub zeta: C64,
    pub n: u64,
    pub grid_size: usize,
    /// `None` at dropped grid points.
    pub values: Vec<Option<f64>>,
    pub i_value: f64,
    /// `|mean of F_n/n − I(ζ)|` over the kept points.
    pub mean_gap: f64,
    /// `max |F_n(x) − n I(ζ)|` over the kept points.
    pub max_gap: f64,
    pub dropped: usize,
}

fn kernel_sums(zeta: C64, rotation: &Rotation, n: u64, grid_size: usize) -> Vec<Option<f64>> {
    ordered_map(grid_size, |i| {
        let x = i as f64 / grid_size as f64;
        if orbit_gap(zeta, x, n, rotation) < EXCLUSION_RADIUS {
            return None;
        }
        birkhoff_sum(zeta, x, n, rotation).ok()
    })
}

pub fn birkhoff_sample(
    zeta: C64,
    rotation: &Rotation,
    n: u64,
    grid_size: usize,
) -> Result<BirkhoffSumSample, DeviationError> {
    if n == 0 || grid_size == 0 {
        return Err(DeviationError::InvalidInput("n and grid_size must be positive".into()));
    }
    let values = kernel_sums(zeta, rotation, n, grid_size);
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    let i_value = log_potential_i(zeta);
    let nf = n as f64;
    let mean = pairwise_mean(&kept.iter().map(|f| f / nf).collect::<Vec<_>>());
    let max_gap = kept
        .iter()
        .map(|f| (f - nf * i_value).abs())
        .fold(0.0, f64::max);
    Ok(BirkhoffSumSample {
        zeta,
        n,
        grid_size,
        dropped: grid_size - kept.len(),
        values,
        i_value,
        mean_gap: (mean - i_value).abs(),
        max_gap,
    })
}

/// Grid estimate of `∫ exp(σ|F_{n,ζ}(x) − nI(ζ)|) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMoment {
    pub sigma: f64,
    pub zeta: C64,
    pub n: u64,
    pub grid_size: usize,
    pub estimate: f64,
    /// `log(estimate)`, finite even when `estimate` overflows.
    pub log_estimate: f64,
    /// `log(estimate) / (σn)`.
    pub log_ratio: f64,
    pub dropped: usize,
}

pub fn exp_moment(
    sigma: f64,
    zeta: C64,
    rotation: &Rotation,
    n: u64,
    grid_size: usize,
) -> Result<ExpMoment, DeviationError> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(DeviationError::InvalidInput(format!("sigma = {sigma} must lie in (0, 1)")));
    }
    if n == 0 || grid_size == 0 {
        return Err(DeviationError::InvalidInput("n and grid_size must be positive".into()));
    }
    let nf = n as f64;
    let center = nf * log_potential_i(zeta);
    let exponents: Vec<f64> = kernel_sums(zeta, rotation, n, grid_size)
        .into_iter()
        .flatten()
        .map(|f| sigma * (f - center).abs())
        .collect();
    if exponents.is_empty() {
        return Err(DeviationError::InvalidInput("every grid point was dropped".into()));
    }
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = exponents.iter().map(|e| (e - top).exp()).collect();
    let log_estimate = top + pairwise_mean(&shifted).ln();
    Ok(ExpMoment {
        sigma,
        zeta,
        n,
        grid_size,
        estimate: log_estimate.exp(),
        log_estimate,
        log_ratio: log_estimate / (sigma * nf),
        dropped: grid_size - exponents.len(),
    })
}

/// One deviation-set measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationMeasure {
    pub n: u64,
    pub delta: f64,
    /// Fraction of kept grid points with `|u_n(x) − L_n| > δ`.
    pub measure: f64,
    /// Same-run grid mean of `u_n`.
    pub l_n: f64,
    pub grid_size: usize,
    pub dropped: usize,
    /// More than 1% of the grid was dropped.
    pub dropped_warning: bool,
}

/// `u_n^u(x)` on the grid, `None` where the orbit meets a near-zero of `a`.
fn unimodular_exponents(model: &JacobiModel, energy: f64, n: u64, grid_size: usize) -> Vec<Option<f64>> {
    let screen = !model.a().is_constant();
    ordered_map(grid_size, |i| {
        let x = i as f64 / grid_size as f64;
        if screen && !orbit_zero_scan(model, x, n + 1, EXCLUSION_RADIUS / model.lambda_a()).is_empty() {
            return None;
        }
        scaled_product(model, x, energy, n, Gauge::Unimodular)
            .ok()
            .map(|p| p.u_n())
    })
}

pub fn deviation_measure(
    model: &JacobiModel,
    energy: f64,
    n: u64,
    delta: f64,
    grid_size: usize,
) -> Result<DeviationMeasure, DeviationError> {
    if grid_size < MIN_DEVIATION_GRID {
        return Err(DeviationError::InvalidInput(format!(
            "grid_size {grid_size} must be at least {MIN_DEVIATION_GRID}"
        )));
    }
    if !(delta > 0.0) {
        return Err(DeviationError::InvalidInput(format!("delta = {delta} must be positive")));
    }
    if n == 0 {
        return Err(DeviationError::InvalidInput("n must be at least 1".into()));
    }
    let kept: Vec<f64> = unimodular_exponents(model, energy, n, grid_size)
        .into_iter()
        .flatten()
        .collect();
    if kept.is_empty() {
        return Err(LyapunovError::AllOrbitsDropped { grid: grid_size }.into());
    }
    let l_n = pairwise_mean(&kept);
    let outside: Vec<f64> = kept
        .iter()
        .map(|u| if (u - l_n).abs() > delta { 1.0 } else { 0.0 })
        .collect();
    let dropped = grid_size - kept.len();
    Ok(DeviationMeasure {
        n,
        delta,
        measure: pairwise_sum(&outside) / kept.len() as f64,
        l_n,
        grid_size,
        dropped,
        dropped_warning: dropped * 100 > grid_size,
    })
}

/// User constants of the large deviation bound `exp(−(c/μ(Ω₁)) δ n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdtConstants {
    pub c_abs: f64,
    pub mu_guess: f64,
}

impl Default for LdtConstants {
    fn default() -> Self {
        LdtConstants {
            c_abs: 1.0,
            mu_guess: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub energy: f64,
    pub n_values: Vec<u64>,
    pub delta: f64,
    pub grid_size: usize,
    pub measures: Vec<f64>,
    pub l_n: Vec<f64>,
    pub dropped: Vec<usize>,
    pub dropped_warning: bool,
    /// Slope of `log(measure)` against `n` over the nonzero measures.
    pub fitted_rate: Option<f64>,
    pub fit_points: usize,
    /// `−c·δ/μ`.
    pub bound_rate: f64,
    /// Fewer than two nonzero measures: the rate is below grid resolution.
    pub floor: bool,
    pub constants: LdtConstants,
}

pub fn ldt_experiment(
    model: &JacobiModel,
    energy: f64,
    n_list: &[u64],
    delta: f64,
    grid_size: usize,
    constants: LdtConstants,
) -> Result<DeviationReport, DeviationError> {
    if n_list.len() < 3 {
        return Err(DeviationError::InvalidInput("need at least three values of n".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DeviationError::InvalidInput("n values must increase".into()));
    }
    let runs = n_list
        .iter()
        .map(|&n| deviation_measure(model, energy, n, delta, grid_size))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in runs.iter().filter(|r| r.measure > 0.0) {
        xs.push(r.n as f64);
        ys.push(r.measure.ln());
    }
    let fitted_rate = if xs.len() >= 2 {
        linear_fit(&xs, &ys).map(|f| f.slope)
    } else {
        None
    };
    Ok(DeviationReport {
        energy,
        n_values: n_list.to_vec(),
        delta,
        grid_size,
        measures: runs.iter().map(|r| r.measure).collect(),
        l_n: runs.iter().map(|r| r.l_n).collect(),
        dropped: runs.iter().map(|r| r.dropped).collect(),
        dropped_warning: runs.iter().any(|r| r.dropped_warning),
        fitted_rate,
        fit_points: xs.len(),
        bound_rate: -constants.c_abs * delta / constants.mu_guess,
        floor: fitted_rate.is_none(),
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::TrigPolynomial;
    use crate::arithmetic::Frequency;

    #[test]
    fn single_term() {
        let rot = Frequency::golden().rotation();
        let z = C64::new(0.2, 0.7);
        let f = birkhoff_sum(z, 0.35, 1, &rot).unwrap();
        assert_eq!(f, (C64::new(0.35, 0.0) - z).norm().ln());
    }

    #[test]
    fn singular_hit_reports_index() {
        let rot = Rotation::rational(1, 4);
        let err = birkhoff_sum(C64::new(0.5, 0.0), 0.0, 4, &rot).unwrap_err();
        assert_eq!(err, DeviationError::Singular { k: 2 });
    }

    #[test]
    fn two_point_rational_sum() {
        let z = C64::new(0.3, 0.0);
        let r = excluded_rational_sum(0.0, z, 2).unwrap();
        // points 0 and 1/2; 1/2 is nearer to 0.3
        assert_eq!(r.excluded_index, 1);
        assert!((r.sum - 0.3f64.ln()).abs() < 1e-15);
        assert!((r.residual - (r.sum - 2.0 * log_potential_i(z)).abs()).abs() < 1e-15);
        assert!(excluded_rational_sum(0.0, z, 1).is_err());
    }

    #[test]
    fn small_sigma_moment_is_one() {
        let rot = Frequency::golden().rotation();
        let m = exp_moment(1e-6, C64::new(0.0, 1.0), &rot, 34, 1024).unwrap();
        assert!((m.estimate - 1.0).abs() < 1e-3);
        assert!(exp_moment(1.0, C64::new(0.0, 1.0), &rot, 34, 64).is_err());
    }

    #[test]
    fn free_model_never_deviates() {
        let zero = TrigPolynomial::new(&[], 0.5).unwrap();
        let m = JacobiModel::new(1.0, TrigPolynomial::constant(1.0, 0.5).unwrap(), 1.0, zero, &Frequency::golden())
            .unwrap();
        let d = deviation_measure(&m, 0.0, 50, 0.01, 512).unwrap();
        assert_eq!(d.measure, 0.0);
        let r = ldt_experiment(&m, 0.0, &[10, 20, 40], 0.01, 512, LdtConstants::default()).unwrap();
        assert!(r.floor && r.fitted_rate.is_none());
        assert!(ldt_experiment(&m, 0.0, &[10, 10, 40], 0.01, 512, LdtConstants::default()).is_err());
        assert!(deviation_measure(&m, 0.0, 50, 0.01, 256).is_err());
    }
}
