//! The Avalanche Principle as an executable check.
//!
//! For `A_1, …, A_n` with `max |det A_j| ≤ 1`, `min ‖A_j‖ ≥ γ > n` and
//! `max_j [log‖A_{j+1}‖ + log‖A_j‖ − log‖A_{j+1}A_j‖] < ½ log γ`, the residual
//!
//! ```text
//! | log‖A_n⋯A_1‖ + Σ_{j=2}^{n−1} log‖A_j‖ − Σ_{j=1}^{n−1} log‖A_{j+1}A_j‖ |
//! ```
//!
//! is at most `C n / γ`. The constant `C` is replaced by a test budget.
//!
//! Blocks are handled as `e^s · U`. The scale terms `s_j` cancel identically
//! in the residual, so it is evaluated on the unit parts alone. When the
//! bound `C n / γ` drops below double resolution use [`crate::precise`].

use std::f64::consts::TAU;

use rand::Rng;
use serde::Serialize;

use crate::cocycle::{scaled_product, CocycleError, Gauge, JacobiModel, ScaledProduct};
use crate::linalg::Mat2;

/// Default value of the test budget replacing the absolute constant.
pub const DEFAULT_C_TEST: f64 = 10.0;

/// Tolerance of the determinant hypothesis.
pub const DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AvalancheError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("block {block}: {source}")]
    SingularBlock {
        block: usize,
        #[source]
        source: CocycleError,
    },
}

/// `e^{log_scale} · unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledMatrix {
    pub unit: Mat2,
    pub log_scale: f64,
    /// `log|det|`, carried separately because `|det unit|` underflows for
    /// long products.
    pub log_abs_det: f64,
}

impl ScaledMatrix {
    pub fn from_matrix(m: Mat2) -> Self {
        let s = m.spectral_norm();
        let log_abs_det = m.det().norm().ln();
        if s == 0.0 || !s.is_finite() {
            return ScaledMatrix {
                unit: m,
                log_scale: 0.0,
                log_abs_det,
            };
        }
        ScaledMatrix {
            unit: m.scale(1.0 / s),
            log_scale: s.ln(),
            log_abs_det,
        }
    }

    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.unit.spectral_norm().ln()
    }

}

impl From<&ScaledProduct> for ScaledMatrix {
    fn from(p: &ScaledProduct) -> Self {
        ScaledMatrix {
            unit: p.unit,
            log_scale: p.log_scale,
            log_abs_det: p.log_abs_det,
        }
    }
}

/// Hypothesis flags and conclusion residual for one suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct APReport {
    pub n_blocks: usize,
    /// `min_j ‖A_j‖` (may overflow to infinity; see `log_gamma`).
    pub gamma_bound: f64,
    pub log_gamma: f64,
    pub max_abs_det: f64,
    pub det_ok: bool,
    /// `max_j [log‖A_{j+1}‖ + log‖A_j‖ − log‖A_{j+1}A_j‖]`.
    pub max_gap: f64,
    pub gap_ok: bool,
    pub size_ok: bool,
    pub lhs_residual: f64,
    /// `log(lhs_residual)`, finite even when the residual underflows.
    pub log_residual: f64,
    /// `C_test · n / γ`.
    pub bound_value: f64,
    pub c_test: f64,
    /// `lhs_residual · γ / n`.
    pub empirical_constant: f64,
    /// Mantissa bits used (53 for double precision).
    pub precision_bits: usize,
}

impl APReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.det_ok && self.gap_ok && self.size_ok
    }

    /// Residual within `C_test · n / γ`, compared in log form.
    pub fn within_bound(&self) -> bool {
        self.log_residual <= self.c_test.ln() + (self.n_blocks as f64).ln() - self.log_gamma
    }
}

/// Builds the report from per-block log norms, the pair gaps and the residual.
pub(crate) fn assemble(
    log_norms: &[f64],
    max_gap: f64,
    log_max_abs_det: f64,
    residual: f64,
    log_residual: f64,
    c_test: f64,
    precision_bits: usize,
) -> APReport {
    let n = log_norms.len();
    let log_gamma = log_norms.iter().copied().fold(f64::INFINITY, f64::min);
    let ln_n = (n as f64).ln();
    APReport {
        n_blocks: n,
        gamma_bound: log_gamma.exp(),
        log_gamma,
        max_abs_det: log_max_abs_det.exp(),
        det_ok: log_max_abs_det <= DET_TOL.ln_1p(),
        max_gap,
        gap_ok: max_gap < 0.5 * log_gamma,
        size_ok: log_gamma > ln_n,
        lhs_residual: residual,
        log_residual,
        bound_value: c_test * (ln_n - log_gamma).exp(),
        c_test,
        empirical_constant: (log_residual + log_gamma - ln_n).exp(),
        precision_bits,
    }
}

pub(crate) fn check_suite_len(n: usize) -> Result<(), AvalancheError> {
    if n < 3 {
        return Err(AvalancheError::InvalidInput(format!(
            "the Avalanche Principle needs at least 3 blocks, got {n}"
        )));
    }
    Ok(())
}

/// Double-precision check of a suite.
pub fn ap_check(blocks: &[ScaledMatrix], c_test: f64) -> Result<APReport, AvalancheError> {
    check_suite_len(blocks.len())?;
    if !(c_test > 0.0) {
        return Err(AvalancheError::InvalidInput("C_test must be positive".into()));
    }
    let unit_log: Vec<f64> = blocks.iter().map(|b| b.unit.spectral_norm().ln()).collect();
    let pair_log: Vec<f64> = blocks
        .windows(2)
        .map(|w| (w[1].unit * w[0].unit).spectral_norm().ln())
        .collect();

    // renormalised product of the unit parts
    let mut prod = Mat2::identity();
    let mut total = 0.0;
    for b in blocks {
        prod = b.unit * prod;
        let s = prod.spectral_norm();
        total += s.ln();
        prod = prod.scale(1.0 / s);
    }
    let mut lhs = total;
    for l in &unit_log[1..unit_log.len() - 1] {
        lhs += l;
    }
    for p in &pair_log {
        lhs -= p;
    }
    let residual = lhs.abs();

    let log_norms: Vec<f64> = blocks
        .iter()
        .zip(&unit_log)
        .map(|(b, l)| b.log_scale + l)
        .collect();
    let max_gap = (0..blocks.len() - 1)
        .map(|j| unit_log[j + 1] + unit_log[j] - pair_log[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let log_det = blocks
        .iter()
        .map(|b| b.log_abs_det)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(assemble(
        &log_norms,
        max_gap,
        log_det,
        residual,
        residual.ln(),
        c_test,
        f64::MANTISSA_DIGITS as usize,
    ))
}

pub fn ap_check_matrices(matrices: &[Mat2], c_test: f64) -> Result<APReport, AvalancheError> {
    let blocks: Vec<ScaledMatrix> = matrices.iter().map(|m| ScaledMatrix::from_matrix(*m)).collect();
    ap_check(&blocks, c_test)
}

/// `A_j = M_n(x + (j−1)nω, E, ω)` for `j = 1..m`.
pub fn ap_blocks(
    model: &JacobiModel,
    x: f64,
    energy: f64,
    block_len: u64,
    num_blocks: usize,
    gauge: Gauge,
) -> Result<Vec<ScaledMatrix>, AvalancheError> {
    check_suite_len(num_blocks)?;
    if block_len == 0 {
        return Err(AvalancheError::InvalidInput("block length must be positive".into()));
    }
    let rot = model.rotation();
    (0..num_blocks)
        .map(|j| {
            let xj = rot.point(x, j as u64 * block_len);
            scaled_product(model, xj, energy, block_len, gauge)
                .map(|p| ScaledMatrix::from(&p))
                .map_err(|source| AvalancheError::SingularBlock { block: j + 1, source })
        })
        .collect()
}

/// `R(left) · diag(γ, 1/γ) · R(right)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteFactor {
    pub left_angle: f64,
    pub gamma: f64,
    pub right_angle: f64,
}

impl SuiteFactor {
    pub fn matrix(&self) -> Mat2 {
        Mat2::rotation(self.left_angle) * Mat2::diag(self.gamma, 1.0 / self.gamma) * Mat2::rotation(self.right_angle)
    }
}

/// Random suite with `γ_j` log-uniform in `[n + 1, gamma_max]` and uniform
/// rotation angles. The gap hypothesis is not enforced here.
pub fn random_suite<R: Rng>(rng: &mut R, n_blocks: usize, gamma_max: f64) -> Vec<SuiteFactor> {
    let lo = (n_blocks as f64 + 1.0).ln();
    let hi = gamma_max.ln().max(lo);
    (0..n_blocks)
        .map(|_| SuiteFactor {
            left_angle: rng.gen::<f64>() * TAU,
            gamma: rng.gen_range(lo..=hi).exp(),
            right_angle: rng.gen::<f64>() * TAU,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::TrigPolynomial;
    use crate::arithmetic::Frequency;

    #[test]
    fn diagonal_suite_telescopes() {
        let a = Mat2::diag(100.0, 0.01);
        let r = ap_check_matrices(&[a; 5], DEFAULT_C_TEST).unwrap();
        assert!(r.det_ok && r.gap_ok && r.size_ok);
        assert_eq!(r.lhs_residual, 0.0);
        assert!(r.within_bound());
    }

    #[test]
    fn small_norms_fail_size() {
        let a = Mat2::diag(2.0, 0.5);
        let r = ap_check_matrices(&[a; 3], DEFAULT_C_TEST).unwrap();
        assert!(!r.size_ok);
        assert!(ap_check_matrices(&[a; 2], DEFAULT_C_TEST).is_err());
    }

    #[test]
    fn large_determinant_flagged() {
        let r = ap_check_matrices(&[Mat2::diag(100.0, 0.02); 4], DEFAULT_C_TEST).unwrap();
        assert!(!r.det_ok);
    }

    #[test]
    fn cocycle_blocks_compose() {
        let m = JacobiModel::schrodinger(
            5.0,
            TrigPolynomial::cosine(1.0, 0.5).unwrap(),
            &Frequency::golden(),
        )
        .unwrap();
        let (x, e, n, k) = (0.123, 0.4, 30u64, 4usize);
        let blocks = ap_blocks(&m, x, e, n, k, Gauge::Unimodular).unwrap();
        let whole = scaled_product(&m, x, e, n * k as u64, Gauge::Unimodular).unwrap();
        let mut prod = Mat2::identity();
        let mut s = 0.0;
        for b in &blocks {
            prod = b.unit * prod;
            s += b.log_scale;
        }
        let composed = s + prod.spectral_norm().ln();
        assert!((composed - whole.log_norm()).abs() < 1e-8 * (n * k as u64) as f64);
        for b in &blocks {
            assert!(b.log_abs_det.abs() < 1e-9);
        }
    }
}
