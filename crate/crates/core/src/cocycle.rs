//! Jacobi transfer matrices and renormalised n-step products.
//!
//! One step at `z` in the analytic gauge is
//!
//! ```text
//! M_a(z) = [[λ_v v(z) − E, −λ_a ã(z)], [λ_a a(z+ω), 0]]
//! ```
//!
//! with `det M_a = λ_a² a(z+ω) ã(z)`. The raw step divides by `λ_a a(z+ω)`
//! and the unimodular step by `|det M_a|^{1/2}`. The n-step product applies
//! the factors at `x + kω`, `k = 1..n`, with `k = 1` innermost.
//!
//! Products are renormalised after every step and carried as a unit-norm
//! matrix plus an accumulated log-scale.

use serde::{Deserialize, Serialize};

use crate::analytic::TrigPolynomial;
use crate::arithmetic::{cf_expand, CFExpansion, Frequency, Rotation};
use crate::linalg::Mat2;
use crate::reduce::pairwise_mean;
use crate::C64;

/// Below this modulus a factor of `a` is treated as a zero.
pub const SINGULAR_TOL: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CocycleError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("singular step at k = {k} (z = {z}): a vanishes on the orbit")]
    SingularStep { k: u64, z: C64 },
    #[error("product collapsed to zero at k = {k}")]
    Degenerate { k: u64 },
    #[error("n must be at least 1")]
    EmptyProduct,
}

/// Normalisation of the transfer-matrix product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `M_n`, one-step determinant `ã(z) / a(z+ω)`.
    Raw,
    /// `M_n^a`, polynomial entries.
    Analytic,
    /// `M_n^u`, determinant of modulus one.
    Unimodular,
}

/// Constants derived from the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    /// `sup_T |a|`.
    pub a_sup: f64,
    /// `sup_T |v|`.
    pub v_sup: f64,
    /// The energy window `𝓔 = [−r, r]`, `r = 2λ_a‖a‖ + λ_v‖v‖`.
    pub energy_window: (f64, f64),
    /// `M₀ = log(3λ_a‖a‖ + 2λ_v‖v‖)`.
    pub m0: f64,
    /// `D = ∫ log|λ_a a(x)| dx` on an equispaced grid.
    pub drift: f64,
    pub drift_grid: usize,
    /// Grid points dropped from `D` because `a` vanished there.
    pub drift_dropped: usize,
}

/// `(λ_a, a, λ_v, v, ω)` with derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiModel {
    lambda_a: f64,
    a: TrigPolynomial,
    a_tilde: TrigPolynomial,
    lambda_v: f64,
    v: TrigPolynomial,
    cf: CFExpansion,
    rotation: Rotation,
    constants: ModelConstants,
}

const CF_DEPTH: usize = 64;
const DRIFT_GRID: usize = 4096;

impl JacobiModel {
    pub fn new(
        lambda_a: f64,
        a: TrigPolynomial,
        lambda_v: f64,
        v: TrigPolynomial,
        frequency: &Frequency,
    ) -> Result<Self, CocycleError> {
        if !(lambda_a > 0.0 && lambda_a.is_finite()) {
            return Err(CocycleError::InvalidModel(format!(
                "lambda_a must be positive, got {lambda_a}"
            )));
        }
        if !(lambda_v > 0.0 && lambda_v.is_finite()) {
            return Err(CocycleError::InvalidModel(format!(
                "lambda_v must be positive, got {lambda_v}"
            )));
        }
        if a.is_zero() {
            return Err(CocycleError::InvalidModel("a is identically zero".into()));
        }
        if !v.is_real() {
            return Err(CocycleError::InvalidModel(
                "v must be real on the real axis (c_{-k} = conj(c_k))".into(),
            ));
        }
        let cf = cf_expand(frequency, CF_DEPTH)
            .map_err(|e| CocycleError::InvalidModel(e.to_string()))?;
        let rotation = frequency.rotation();
        let a_sup = a.sup_norm_real();
        let v_sup = v.sup_norm_real();
        let r = 2.0 * lambda_a * a_sup + lambda_v * v_sup;
        let drift_grid = DRIFT_GRID.max(4 * (2 * a.degree() + 1));
        let (drift, drift_dropped) = drift_on_grid(lambda_a, &a, drift_grid);
        let constants = ModelConstants {
            a_sup,
            v_sup,
            energy_window: (-r, r),
            m0: (3.0 * lambda_a * a_sup + 2.0 * lambda_v * v_sup).ln(),
            drift,
            drift_grid,
            drift_dropped,
        };
        Ok(JacobiModel {
            lambda_a,
            a_tilde: a.reflect_conjugate(),
            a,
            lambda_v,
            v,
            cf,
            rotation,
            constants,
        })
    }

    /// Schrödinger case: `λ_a = 1`, `a ≡ 1`, `λ_v = λ_s`.
    pub fn schrodinger(
        lambda_s: f64,
        v: TrigPolynomial,
        frequency: &Frequency,
    ) -> Result<Self, CocycleError> {
        let one = TrigPolynomial::constant(1.0, v.rho())
            .map_err(|e| CocycleError::InvalidModel(e.to_string()))?;
        JacobiModel::new(1.0, one, lambda_s, v, frequency)
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_v(&self) -> f64 {
        self.lambda_v
    }

    pub fn a(&self) -> &TrigPolynomial {
        &self.a
    }

    pub fn a_tilde(&self) -> &TrigPolynomial {
        &self.a_tilde
    }

    pub fn v(&self) -> &TrigPolynomial {
        &self.v
    }

    pub fn frequency(&self) -> &Frequency {
        &self.cf.frequency
    }

    pub fn cf(&self) -> &CFExpansion {
        &self.cf
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn omega(&self) -> f64 {
        self.rotation.omega()
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn is_schrodinger(&self) -> bool {
        self.lambda_a == 1.0 && self.a.is_constant() && self.a.coeff(0) == C64::new(1.0, 0.0)
    }

    /// Largest Fourier degree of `a` and `v`.
    pub fn max_degree(&self) -> usize {
        self.a.degree().max(self.v.degree())
    }

    /// Analytic-gauge step at a complex point.
    pub fn analytic_step(&self, z: C64, energy: f64) -> Mat2 {
        let shifted = z + self.omega();
        analytic_matrix(
            self.lambda_v * self.v.eval(z) - energy,
            self.lambda_a * self.a_tilde.eval(z),
            self.lambda_a * self.a.eval(shifted),
        )
    }
}

fn analytic_matrix(diag: C64, lam_a_tilde: C64, lam_a_shift: C64) -> Mat2 {
    Mat2::new(diag, -lam_a_tilde, lam_a_shift, C64::new(0.0, 0.0))
}

/// `D` on an `n`-point grid; points where `a` vanishes are dropped and counted.
pub fn drift_on_grid(lambda_a: f64, a: &TrigPolynomial, n: usize) -> (f64, usize) {
    let mut dropped = 0;
    let vals: Vec<f64> = (0..n)
        .filter_map(|i| {
            let m = a.eval_real(i as f64 / n as f64).norm();
            if m < SINGULAR_TOL {
                dropped += 1;
                None
            } else {
                Some((lambda_a * m).ln())
            }
        })
        .collect();
    (pairwise_mean(&vals), dropped)
}

/// Raw and analytic one-step matrices at `z`.
pub fn one_step(model: &JacobiModel, z: C64, energy: f64) -> Result<(Mat2, Mat2), CocycleError> {
    let m_a = model.analytic_step(z, energy);
    let denom = m_a.c;
    if denom.norm() < SINGULAR_TOL {
        return Err(CocycleError::SingularStep { k: 0, z });
    }
    Ok((m_a.scale_complex(denom.inv()), m_a))
}

/// `d(z, ω) = log|λ_a² a(z+ω) ã(z)|`; `−∞` when a factor vanishes.
pub fn d_log(model: &JacobiModel, z: C64) -> f64 {
    let la = model.lambda_a;
    let f1 = (la * model.a.eval(z + model.omega())).norm();
    let f2 = (la * model.a_tilde.eval(z)).norm();
    if f1 == 0.0 || f2 == 0.0 {
        return f64::NEG_INFINITY;
    }
    f1.ln() + f2.ln()
}

/// An n-step product `e^{log_scale} · unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledProduct {
    /// Spectral norm one.
    pub unit: Mat2,
    pub log_scale: f64,
    pub n: u64,
    /// `Σ_k d(x + kω, ω)` over the factors used.
    pub sum_d: f64,
    /// `Σ_k log|det step_k|` of the step matrices as formed.
    pub log_abs_det: f64,
    pub gauge: Gauge,
}

impl ScaledProduct {
    pub fn identity(gauge: Gauge) -> Self {
        ScaledProduct {
            unit: Mat2::identity(),
            log_scale: 0.0,
            n: 0,
            sum_d: 0.0,
            log_abs_det: 0.0,
            gauge,
        }
    }

    /// Wrap an explicit matrix.
    pub fn from_matrix(m: Mat2, gauge: Gauge) -> Result<Self, CocycleError> {
        let mut p = ScaledProduct::identity(gauge);
        p.push(m, 0.0, 0)?;
        p.n = 1;
        Ok(p)
    }

    /// `(1/n) log‖product‖`.
    pub fn u_n(&self) -> f64 {
        self.log_scale / self.n as f64
    }

    pub fn log_norm(&self) -> f64 {
        self.log_scale
    }

    /// `|det|` assembled from the unit matrix, `|det unit| · e^{2 log_scale}`.
    /// Only meaningful while `e^{−2 log_scale}` is well above the rounding
    /// level of the unit matrix; [`ScaledProduct::log_abs_det`] is the
    /// robust telemetry.
    pub fn det_abs_direct(&self) -> f64 {
        self.unit.det().norm() * (2.0 * self.log_scale).exp()
    }

    /// The product as an explicit matrix (may overflow for long products).
    pub fn matrix(&self) -> Mat2 {
        self.unit.scale(self.log_scale.exp())
    }

    /// Left-multiply by `step`, renormalising.
    fn push(&mut self, step: Mat2, d: f64, k: u64) -> Result<(), CocycleError> {
        let s = step.spectral_norm();
        if !(s > 0.0 && s.is_finite()) {
            return Err(CocycleError::Degenerate { k });
        }
        let step_unit = step.scale(1.0 / s);
        let q = step_unit * self.unit;
        let nrm = q.spectral_norm();
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(CocycleError::Degenerate { k });
        }
        self.unit = q.scale(1.0 / nrm);
        self.log_scale += s.ln() + nrm.ln();
        self.sum_d += d;
        self.log_abs_det += step.det().norm().ln();
        Ok(())
    }

    /// The composition `later · self`: log-scales add, so does `sum_d`.
    pub fn then(&self, later: &ScaledProduct) -> Result<ScaledProduct, CocycleError> {
        let q = later.unit * self.unit;
        let nrm = q.spectral_norm();
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(CocycleError::Degenerate { k: self.n });
        }
        Ok(ScaledProduct {
            unit: q.scale(1.0 / nrm),
            log_scale: self.log_scale + later.log_scale + nrm.ln(),
            n: self.n + later.n,
            sum_d: self.sum_d + later.sum_d,
            log_abs_det: self.log_abs_det + later.log_abs_det,
            gauge: self.gauge,
        })
    }
}

/// n-step products of the orbit of real `x` in several gauges at once.
/// The orbit is evaluated once; each gauge has its own renormalised product.
pub fn scaled_products(
    model: &JacobiModel,
    x: f64,
    energy: f64,
    n: u64,
    gauges: &[Gauge],
) -> Result<Vec<ScaledProduct>, CocycleError> {
    if n == 0 {
        return Err(CocycleError::EmptyProduct);
    }
    let mut out: Vec<ScaledProduct> = gauges.iter().map(|g| ScaledProduct::identity(*g)).collect();
    let rot = &model.rotation;
    let la = model.lambda_a;
    let lv = model.lambda_v;
    let a_const = model.a.is_constant();
    let a0 = model.a.coeff(0);
    let eval_a = |t: f64| if a_const { a0 } else { model.a.eval_real(t) };

    let mut z = rot.point(x, 1);
    let mut a_here = eval_a(z);
    for k in 1..=n {
        let z_next = rot.point(x, k + 1);
        let a_next = eval_a(z_next);
        // on the real axis ã(z) = conj(a(z))
        let lam_tilde = la * a_here.conj();
        let lam_shift = la * a_next;
        let m_a = analytic_matrix(lv * model.v.eval_real(z) - energy, lam_tilde, lam_shift);
        let (m1, m2) = (lam_shift.norm(), lam_tilde.norm());
        let d = m1.ln() + m2.ln();
        for p in out.iter_mut() {
            let singular = match p.gauge {
                Gauge::Analytic => false,
                Gauge::Raw => m1 < SINGULAR_TOL,
                Gauge::Unimodular => m1 < SINGULAR_TOL || m2 < SINGULAR_TOL,
            };
            if singular {
                return Err(CocycleError::SingularStep {
                    k,
                    z: C64::new(z, 0.0),
                });
            }
            let step = match p.gauge {
                Gauge::Analytic => m_a,
                Gauge::Raw => m_a.scale_complex(lam_shift.inv()),
                Gauge::Unimodular => m_a.scale((-0.5 * d).exp()),
            };
            p.push(step, d, k)?;
        }
        z = z_next;
        a_here = a_next;
    }
    for p in out.iter_mut() {
        p.n = n;
    }
    Ok(out)
}

/// `M_n(x, E, ω)` in one gauge.
pub fn scaled_product(
    model: &JacobiModel,
    x: f64,
    energy: f64,
    n: u64,
    gauge: Gauge,
) -> Result<ScaledProduct, CocycleError> {
    Ok(scaled_products(model, x, energy, n, &[gauge])?.remove(0))
}

/// Indices `k ∈ 0..=n` with `|a(x + kω)| < tol`.
pub fn orbit_zero_scan(model: &JacobiModel, x: f64, n: u64, tol: f64) -> Vec<u64> {
    (0..=n)
        .filter(|&k| model.a.eval_real(model.rotation.point(x, k)).norm() < tol)
        .collect()
}
