//! Finite-scale Lyapunov exponents and the explicit constants built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cocycle::{drift_on_grid, scaled_products, Gauge, JacobiModel};
use crate::reduce::{ordered_map, pairwise_mean};
use crate::stats::linear_fit;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LyapunovError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("every orbit on the {grid}-point grid hit a zero of a")]
    AllOrbitsDropped { grid: usize },
    #[error("degenerate constant: {0}")]
    Degenerate(String),
    #[error("only {usable} usable energy pairs (need at least 3)")]
    InsufficientData { usable: usize },
}

/// Grid estimate of `L_n(E)` in the unimodular and analytic gauges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub n: u64,
    pub grid_size: usize,
    /// Mean of `u_n^u` over the kept grid points.
    pub l_n: f64,
    /// Mean of `u_n^a` over the kept grid points.
    pub l_n_a: f64,
    /// Grid mean of `log|λ_a a(x)|`.
    pub d_hat: f64,
    pub dropped_orbits: usize,
    /// `|L_n − (L_n^a − D̂)|`.
    pub gauge_residual: f64,
}

/// Per-point exponents `(u_n^u, u_n^a)` on the equispaced grid; `None` where
/// the orbit met a zero of `a`.
pub fn exponents_on_grid(
    model: &JacobiModel,
    energy: f64,
    n: u64,
    grid_size: usize,
) -> Vec<Option<(f64, f64)>> {
    ordered_map(grid_size, |i| {
        let x = i as f64 / grid_size as f64;
        scaled_products(model, x, energy, n, &[Gauge::Unimodular, Gauge::Analytic])
            .ok()
            .map(|p| (p[0].u_n(), p[1].u_n()))
    })
}

/// `L_n(E) = ∫ (1/n) log‖M_n(x, E)‖ dx` on an equispaced grid.
pub fn finite_le(
    model: &JacobiModel,
    energy: f64,
    n: u64,
    grid_size: usize,
) -> Result<LyapunovEstimate, LyapunovError> {
    let need = 2 * model.max_degree() + 1;
    if grid_size < need {
        return Err(LyapunovError::InvalidInput(format!(
            "grid_size {grid_size} must be at least 2K + 1 = {need}"
        )));
    }
    if n == 0 {
        return Err(LyapunovError::InvalidInput("n must be at least 1".into()));
    }
    let per_x = exponents_on_grid(model, energy, n, grid_size);
    let kept: Vec<(f64, f64)> = per_x.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(LyapunovError::AllOrbitsDropped { grid: grid_size });
    }
    let l_n = pairwise_mean(&kept.iter().map(|p| p.0).collect::<Vec<_>>());
    let l_n_a = pairwise_mean(&kept.iter().map(|p| p.1).collect::<Vec<_>>());
    let (d_hat, _) = drift_on_grid(model.lambda_a(), model.a(), grid_size);
    Ok(LyapunovEstimate {
        energy,
        n,
        grid_size,
        l_n,
        l_n_a,
        d_hat,
        dropped_orbits: grid_size - kept.len(),
        gauge_residual: (l_n - (l_n_a - d_hat)).abs(),
    })
}

/// `2 L_{2n} − L_n`.
pub fn ap_extrapolate(l_n: f64, l_2n: f64) -> f64 {
    2.0 * l_2n - l_n
}

/// Deep-scale reference value with a consistency check against half the scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceEstimate {
    pub l_ref: f64,
    pub n: u64,
    pub l_half: f64,
    /// `|L_n − L_{n/2}|`.
    pub consistency: f64,
}

pub fn reference_le(
    model: &JacobiModel,
    energy: f64,
    n: u64,
    grid_size: usize,
) -> Result<ReferenceEstimate, LyapunovError> {
    let deep = finite_le(model, energy, n, grid_size)?;
    let half = finite_le(model, energy, (n / 2).max(1), grid_size)?;
    Ok(ReferenceEstimate {
        l_ref: deep.l_n,
        n,
        l_half: half.l_n,
        consistency: (deep.l_n - half.l_n).abs(),
    })
}

/// Unknown absolute constants, exposed as parameters (default 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsoluteConstants {
    /// `C` of the strong Birkhoff theorem.
    pub big_c: f64,
    /// `c` of the strong Birkhoff theorem.
    pub small_c: f64,
    /// `C(Ω, Ω₁)`.
    pub domain_c: f64,
}

impl Default for AbsoluteConstants {
    fn default() -> Self {
        AbsoluteConstants {
            big_c: 1.0,
            small_c: 1.0,
            domain_c: 1.0,
        }
    }
}

/// Sup norms over `T`, `Ω = {|Re z| < 1, |Im z| < ρ}` and
/// `Ω₁ = {|Re z| < 2/3, |Im z| < ρ/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNorms {
    pub a_torus: f64,
    pub v_torus: f64,
    pub a_omega: f64,
    pub v_omega: f64,
    pub a_omega1: f64,
    pub v_omega1: f64,
    /// Largest relative change of the strip sup norms under grid doubling.
    pub refinement: f64,
}

const STRIP_NX: usize = 256;
const STRIP_NY: usize = 64;

impl SupNorms {
    pub fn of(model: &JacobiModel) -> SupNorms {
        // both Re-ranges cover a full period, so each domain is a strip
        let rho = model.a().rho().min(model.v().rho());
        let coarse = |f: &crate::TrigPolynomial, h: f64| f.sup_norm_strip(h, STRIP_NX, STRIP_NY);
        let fine =
            |f: &crate::TrigPolynomial, h: f64| f.sup_norm_strip(h, 2 * STRIP_NX, 2 * STRIP_NY);
        let rel = |a: f64, b: f64| if b == 0.0 { 0.0 } else { (a - b).abs() / b };
        let a_omega = coarse(model.a(), rho);
        let v_omega = coarse(model.v(), rho);
        let a_omega1 = coarse(model.a(), 0.5 * rho);
        let v_omega1 = coarse(model.v(), 0.5 * rho);
        let refinement = rel(a_omega, fine(model.a(), rho))
            .max(rel(v_omega, fine(model.v(), rho)))
            .max(rel(a_omega1, fine(model.a(), 0.5 * rho)))
            .max(rel(v_omega1, fine(model.v(), 0.5 * rho)));
        let c = model.constants();
        SupNorms {
            a_torus: c.a_sup,
            v_torus: c.v_sup,
            a_omega,
            v_omega,
            a_omega1,
            v_omega1,
            refinement,
        }
    }
}

/// Closed-form thresholds, radii and rates evaluated for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub gamma: f64,
    pub epsilon0: f64,
    pub m0: f64,
    pub drift: f64,
    pub energy_window: (f64, f64),
    pub sup: SupNorms,
    pub constants: AbsoluteConstants,
    /// `max(λ_a‖a‖_Ω / ‖v‖_Ω, 2λ_a‖a‖_Ω / ε₀)`.
    pub lambda_0: f64,
    /// `max(5‖v‖_T^{1/γ}, 2λ_a‖a‖_T, (λ_a‖a‖_Ω)^{2/γ} / ‖v‖_Ω) · (2/ε₀)^{2/γ}`.
    pub lambda_p: f64,
    /// Schrödinger `λ₀ˢ = 2/ε₀`.
    pub lambda_0_s: f64,
    /// Schrödinger `λ_pˢ = (20‖v‖_Ω / ε₀²)^{1/γ}`.
    pub lambda_p_s: f64,
    /// `C(Ω,Ω₁) log(10‖v‖_Ω / ε₀)`.
    pub c_v: f64,
    /// `max(log(10‖v‖_Ω / ε₀), log(‖a‖_Ω / ‖a‖_{Ω₁}))`.
    pub c_va_big: f64,
    /// `1 / (2 C C(Ω,Ω₁) C_{v,a})`.
    pub c_va: f64,
    /// `c / (C(Ω,Ω₁) C_{v,a})`.
    pub c_bar_va: f64,
    /// `c̄ / (2c̄ + 8·10⁵)` with `c̄ = c̄_{v,a}`.
    pub tau: f64,
    /// Schrödinger `M₀ˢ = log(3 + 2λ_s‖v‖_T)`.
    pub m0_s: f64,
    /// Schrödinger `c_s = 1 / (2 C C_v)`.
    pub c_s: f64,
    /// Schrödinger `c̄_s = c / (8 M₀ˢ C_v)`.
    pub c_bar_s: f64,
    pub tau_s: f64,
}

/// `c̄ / (2c̄ + 8·10⁵)`.
pub fn tau_formula(c_bar: f64) -> f64 {
    c_bar / (2.0 * c_bar + 8e5)
}

impl Thresholds {
    /// `r_E(ň) = L₀/(200ň) · exp((1−ň)M₀ − 2ň|D|)`.
    pub fn r_e(&self, l0: f64, check_n: f64) -> f64 {
        l0 / (200.0 * check_n) * ((1.0 - check_n) * self.m0 - 2.0 * check_n * self.drift.abs()).exp()
    }

    /// Schrödinger `r_Eˢ(ň_s) = L₀/(200ň_s) · exp(−5M₀ˢň_s)`.
    pub fn r_e_schrodinger(&self, l0: f64, check_n: f64) -> f64 {
        l0 / (200.0 * check_n) * (-5.0 * self.m0_s * check_n).exp()
    }
}

pub fn thresholds(
    model: &JacobiModel,
    gamma: f64,
    epsilon0: f64,
    constants: AbsoluteConstants,
) -> Result<Thresholds, LyapunovError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LyapunovError::InvalidInput(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if epsilon0 == 0.0 {
        return Err(LyapunovError::Degenerate("epsilon0 = 0".into()));
    }
    if !(epsilon0 > 0.0 && epsilon0.is_finite()) {
        return Err(LyapunovError::InvalidInput(format!(
            "epsilon0 must be positive, got {epsilon0}"
        )));
    }
    let sup = SupNorms::of(model);
    let c = model.constants();
    let la = model.lambda_a();
    let lambda_0 = (la * sup.a_omega / sup.v_omega).max(2.0 * la * sup.a_omega / epsilon0);
    let lambda_p = (5.0 * sup.v_torus.powf(1.0 / gamma))
        .max(2.0 * la * sup.a_torus)
        .max((la * sup.a_omega).powf(2.0 / gamma) / sup.v_omega)
        * (2.0 / epsilon0).powf(2.0 / gamma);
    let log_v = (10.0 * sup.v_omega / epsilon0).ln();
    let c_v = constants.domain_c * log_v;
    let c_va_big = log_v.max((sup.a_omega / sup.a_omega1).ln());
    let c_va = 1.0 / (2.0 * constants.big_c * constants.domain_c * c_va_big);
    let c_bar_va = constants.small_c / (constants.domain_c * c_va_big);
    let m0_s = (3.0 + 2.0 * model.lambda_v() * sup.v_torus).ln();
    let c_bar_s = constants.small_c / (8.0 * m0_s * c_v);
    Ok(Thresholds {
        gamma,
        epsilon0,
        m0: c.m0,
        drift: c.drift,
        energy_window: c.energy_window,
        sup,
        constants,
        lambda_0,
        lambda_p,
        lambda_0_s: 2.0 / epsilon0,
        lambda_p_s: (20.0 * sup.v_omega / (epsilon0 * epsilon0)).powf(1.0 / gamma),
        c_v,
        c_va_big,
        c_va,
        c_bar_va,
        tau: tau_formula(c_bar_va),
        m0_s,
        c_s: 1.0 / (2.0 * constants.big_c * c_v),
        c_bar_s,
        tau_s: tau_formula(c_bar_s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderPair {
    pub e1: f64,
    pub e2: f64,
    /// `|L(E₁) − L(E₂)|` with `L ≈ 2L_{2n} − L_n`.
    pub delta_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub pairs: Vec<HolderPair>,
    pub used_pairs: usize,
    pub excluded_pairs: usize,
    /// Slope of `log|ΔL|` against `log|ΔE|`.
    pub fitted_tau: f64,
    pub intercept: f64,
    pub residual_std_error: f64,
    /// `c̄ / (2c̄ + 8·10⁵)` for the supplied `c̄`.
    pub tau_formula: f64,
    pub c_bar: f64,
    pub n: u64,
    pub grid_size: usize,
}

/// Sampling parameters for [`holder_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderParams {
    pub e_center: f64,
    pub radius: f64,
    pub num_pairs: usize,
    pub n: u64,
    pub grid_size: usize,
    pub seed: u64,
    pub c_bar: f64,
}

/// Pairs with `|ΔE|` log-uniform in `[radius·10⁻⁴, radius]`, both energies in
/// `[E_c − radius, E_c + radius]`.
pub fn sample_pairs(e_center: f64, radius: f64, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((radius * 1e-4).ln(), radius.ln());
    (0..count)
        .map(|_| {
            let de = rng.gen_range(lo..=hi).exp();
            let e1 = e_center - radius + rng.gen::<f64>() * (2.0 * radius - de);
            (e1, e1 + de)
        })
        .collect()
}

pub fn holder_fit(model: &JacobiModel, params: &HolderParams) -> Result<HolderReport, LyapunovError> {
    if !(params.radius > 0.0) {
        return Err(LyapunovError::InvalidInput("radius must be positive".into()));
    }
    let pairs = sample_pairs(params.e_center, params.radius, params.num_pairs, params.seed);
    holder_fit_pairs(model, &pairs, params.n, params.grid_size, params.c_bar)
}

/// Hölder regression over explicit energy pairs. Pairs with `E₁ = E₂` or
/// `|ΔL| < 10⁻¹²` are kept in the report but excluded from the fit.
pub fn holder_fit_pairs(
    model: &JacobiModel,
    pairs: &[(f64, f64)],
    n: u64,
    grid_size: usize,
    c_bar: f64,
) -> Result<HolderReport, LyapunovError> {
    let proxy = |e: f64| -> Result<f64, LyapunovError> {
        let l_n = finite_le(model, e, n, grid_size)?.l_n;
        let l_2n = finite_le(model, e, 2 * n, grid_size)?.l_n;
        Ok(ap_extrapolate(l_n, l_2n))
    };
    let mut out = Vec::with_capacity(pairs.len());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &(e1, e2) in pairs {
        let delta_l = if e1 == e2 {
            0.0
        } else {
            (proxy(e1)? - proxy(e2)?).abs()
        };
        if e1 != e2 && delta_l >= 1e-12 {
            xs.push((e1 - e2).abs().ln());
            ys.push(delta_l.ln());
        }
        out.push(HolderPair { e1, e2, delta_l });
    }
    if xs.len() < 3 {
        return Err(LyapunovError::InsufficientData { usable: xs.len() });
    }
    let fit = linear_fit(&xs, &ys).ok_or(LyapunovError::InsufficientData { usable: xs.len() })?;
    Ok(HolderReport {
        used_pairs: xs.len(),
        excluded_pairs: out.len() - xs.len(),
        pairs: out,
        fitted_tau: fit.slope,
        intercept: fit.intercept,
        residual_std_error: fit.residual_std_error,
        tau_formula: tau_formula(c_bar),
        c_bar,
        n,
        grid_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::TrigPolynomial;
    use crate::arithmetic::Frequency;

    fn free_model() -> JacobiModel {
        let zero = TrigPolynomial::new(&[], 0.5).unwrap();
        JacobiModel::schrodinger(1.0, zero, &Frequency::golden()).unwrap()
    }

    fn amo(lambda: f64) -> JacobiModel {
        JacobiModel::schrodinger(
            lambda,
            TrigPolynomial::cosine(1.0, 0.5).unwrap(),
            &Frequency::golden(),
        )
        .unwrap()
    }

    #[test]
    fn free_model_has_zero_exponent() {
        let m = free_model();
        for n in [1, 10, 100] {
            let est = finite_le(&m, 0.0, n, 64).unwrap();
            assert!(est.l_n.abs() < 1e-12);
            assert_eq!(est.dropped_orbits, 0);
        }
    }

    #[test]
    fn extrapolation_arithmetic() {
        assert_eq!(ap_extrapolate(0.7, 0.7), 0.7);
        assert!((ap_extrapolate(1.0, 0.9) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn grid_must_resolve_fourier_degree() {
        let m = amo(2.0);
        assert!(matches!(
            finite_le(&m, 0.0, 10, 2),
            Err(LyapunovError::InvalidInput(_))
        ));
    }

    #[test]
    fn small_model_thresholds() {
        let m = amo(2.0);
        let t = thresholds(&m, 0.5, 0.3, AbsoluteConstants::default()).unwrap();
        assert!((t.energy_window.1 - 6.0).abs() < 1e-12);
        assert!((t.m0 - 11f64.ln()).abs() < 1e-12);
        assert!(t.lambda_0 >= 2.0 * t.sup.a_omega / 0.3 - 1e-12);
        assert!(t.tau > 0.0 && t.tau < 0.5);
        assert!(matches!(
            thresholds(&m, 0.5, 0.0, AbsoluteConstants::default()),
            Err(LyapunovError::Degenerate(_))
        ));
        assert!(thresholds(&m, 1.0, 0.3, AbsoluteConstants::default()).is_err());
    }

    #[test]
    fn r_e_substitution() {
        let m = amo(2.0);
        let mut t = thresholds(&m, 0.5, 0.3, AbsoluteConstants::default()).unwrap();
        t.m0 = 1.0;
        t.drift = 0.0;
        assert!((t.r_e(1.0, 2.0) - (-1f64).exp() / 400.0).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let r = t.r_e(1.0, k as f64);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn holder_needs_three_usable_pairs() {
        let m = free_model();
        let pairs = [(0.1, 0.1), (0.4, 0.4), (-0.3, -0.3)];
        assert!(matches!(
            holder_fit_pairs(&m, &pairs, 10, 32, 1.0),
            Err(LyapunovError::InsufficientData { usable: 0 })
        ));
        let p = HolderParams {
            e_center: 0.0,
            radius: -1.0,
            num_pairs: 6,
            n: 10,
            grid_size: 32,
            seed: 1,
            c_bar: 1.0,
        };
        assert!(matches!(holder_fit(&m, &p), Err(LyapunovError::InvalidInput(_))));
    }

    #[test]
    fn duplicate_pair_is_excluded() {
        let m = amo(3.0);
        let pairs = [(0.1, 0.1), (0.1, 0.2), (0.1, 0.15), (0.3, 0.31), (-0.2, 0.0)];
        let r = holder_fit_pairs(&m, &pairs, 20, 128, 1.0).unwrap();
        assert_eq!(r.pairs.len(), 5);
        assert_eq!(r.pairs[0].delta_l, 0.0);
        assert_eq!(r.excluded_pairs, 1);
        assert_eq!(r.used_pairs, 4);
    }

    #[test]
    fn sampled_pairs_stay_in_window() {
        for (e1, e2) in sample_pairs(1.0, 0.05, 200, 7) {
            assert!(e1 >= 0.95 - 1e-12 && e2 <= 1.05 + 1e-12);
            let de = e2 - e1;
            assert!(de >= 0.05e-4 * (1.0 - 1e-9) && de <= 0.05 * (1.0 + 1e-9));
        }
    }
}
