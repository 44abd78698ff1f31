//! Trigonometric polynomials on the strip `|Im z| < ρ`, the logarithmic
//! potential mean `I(ζ)`, and the grid estimate of `ε₀`.
//!
//! The conjugate function `ã` is taken to be the analytic continuation of
//! `x ↦ conj(a(x))`: the coefficient at frequency `k` becomes `conj(c_{−k})`.
//! On the real axis `ã(x) = conj(a(x))` holds exactly.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::reduce::pairwise_mean;
use crate::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `f(z) = Σ_{k=−K}^{K} c_k e^{2πikz}` with declared strip half-width `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    // coeffs[j] is the coefficient of frequency j − degree
    coeffs: Vec<C64>,
    degree: usize,
    rho: f64,
}

impl TrigPolynomial {
    /// Build from `(k, c_k)` pairs. Repeated frequencies are summed.
    pub fn new(terms: &[(i64, C64)], rho: f64) -> Result<Self, AnalyticError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(AnalyticError::InvalidInput(format!(
                "strip half-width rho must be positive, got {rho}"
            )));
        }
        if terms.iter().any(|(_, c)| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(AnalyticError::InvalidInput(
                "coefficients must be finite".into(),
            ));
        }
        let degree = terms
            .iter()
            .filter(|(_, c)| *c != C64::new(0.0, 0.0))
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * degree + 1];
        for &(k, c) in terms {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            coeffs[(k + degree as i64) as usize] += c;
        }
        Ok(TrigPolynomial {
            coeffs,
            degree,
            rho,
        })
    }

    pub fn constant(c: f64, rho: f64) -> Result<Self, AnalyticError> {
        Self::new(&[(0, C64::new(c, 0.0))], rho)
    }

    /// `amplitude · 2cos(2πx)`, i.e. `c_{±1} = amplitude`.
    pub fn cosine(amplitude: f64, rho: f64) -> Result<Self, AnalyticError> {
        let c = C64::new(amplitude, 0.0);
        Self::new(&[(-1, c), (1, c)], rho)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Coefficient at frequency `k` (zero outside the support).
    pub fn coeff(&self, k: i64) -> C64 {
        let j = k + self.degree as i64;
        if j < 0 || j as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[j as usize]
        }
    }

    /// Nonzero `(k, c_k)` pairs in increasing `k`.
    pub fn terms(&self) -> Vec<(i64, C64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(|(j, c)| (j as i64 - self.degree as i64, *c))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn is_constant(&self) -> bool {
        self.degree == 0
    }

    /// Real on ℝ iff `c_{−k} = conj(c_k)` for every `k`.
    pub fn is_real(&self) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tol = 1e-14 * scale.max(1.0);
        (0..=self.degree as i64).all(|k| (self.coeff(-k) - self.coeff(k).conj()).norm() <= tol)
    }

    /// True when `z` lies in the closed strip `|Im z| ≤ ρ`.
    pub fn in_strip(&self, z: C64) -> bool {
        z.im.abs() <= self.rho
    }

    /// Exact finite Fourier sum. Points outside the strip are evaluated
    /// anyway; use [`TrigPolynomial::in_strip`] to flag them.
    pub fn eval(&self, z: C64) -> C64 {
        let d = self.degree;
        if d == 0 {
            return self.coeffs[0];
        }
        let w = (C64::new(0.0, 2.0 * PI) * z).exp();
        // Horner in w for k >= 0 and in 1/w for k < 0.
        let mut pos = self.coeffs[2 * d];
        for j in (d..2 * d).rev() {
            pos = pos * w + self.coeffs[j];
        }
        let winv = w.inv();
        let mut neg = self.coeffs[0];
        for j in 1..d {
            neg = neg * winv + self.coeffs[j];
        }
        pos + neg * winv
    }

    /// Evaluation on the real axis.
    pub fn eval_real(&self, x: f64) -> C64 {
        self.eval(C64::new(x, 0.0))
    }

    /// The continuation of `x ↦ conj(f(x))`: frequency `k` gets `conj(c_{−k})`.
    pub fn reflect_conjugate(&self) -> TrigPolynomial {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        TrigPolynomial {
            coeffs,
            degree: self.degree,
            rho: self.rho,
        }
    }

    pub fn scaled(&self, s: f64) -> TrigPolynomial {
        TrigPolynomial {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            degree: self.degree,
            rho: self.rho,
        }
    }

    /// Mean over `n` equispaced points of `T`. Equals `c_0` exactly (up to
    /// rounding) once `n > 2K`.
    pub fn grid_mean(&self, n: usize) -> C64 {
        let vals: Vec<C64> = (0..n).map(|i| self.eval_real(i as f64 / n as f64)).collect();
        C64::new(
            pairwise_mean(&vals.iter().map(|c| c.re).collect::<Vec<_>>()),
            pairwise_mean(&vals.iter().map(|c| c.im).collect::<Vec<_>>()),
        )
    }

    /// `sup_{x ∈ T} |f(x)|`: dense grid followed by a golden-section polish
    /// around the best grid point.
    pub fn sup_norm_real(&self) -> f64 {
        let n = (512 * (self.degree + 1)).max(1024);
        let f = |x: f64| self.eval_real(x).norm();
        let (mut best_x, mut best) = (0.0, f(0.0));
        for i in 1..n {
            let x = i as f64 / n as f64;
            let v = f(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let h = 1.0 / n as f64;
        best.max(golden_max(&f, best_x - h, best_x + h))
    }

    /// `sup |f|` over the closed strip `|Im z| ≤ height`, estimated on an
    /// `nx × ny` grid (`ny` rows from `−height` to `height` inclusive).
    pub fn sup_norm_strip(&self, height: f64, nx: usize, ny: usize) -> f64 {
        let ny = ny.max(2);
        (0..ny)
            .into_par_iter()
            .map(|j| {
                let y = -height + 2.0 * height * j as f64 / (ny - 1) as f64;
                (0..nx)
                    .map(|i| self.eval(C64::new(i as f64 / nx as f64, y)).norm())
                    .fold(0.0, f64::max)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    fa.max(fb)
}

/// `Re[w log w]` with `h(0) = 0`; the principal argument is continuous along
/// `y ↦ y − ζ` whenever `Im ζ ≠ 0`, and the imaginary term vanishes when it is 0.
fn re_w_log_w(w: C64) -> f64 {
    if w.re == 0.0 && w.im == 0.0 {
        return 0.0;
    }
    w.re * w.norm().ln() - w.im * w.arg()
}

/// `I(ζ) = ∫₀¹ log|y − ζ| dy` in closed form: `Re[(y−ζ)log(y−ζ) − y]` from 0 to 1.
/// Real `ζ` in `[0, 1]` is an integrable singularity and uses the same formula.
pub fn log_potential_i(zeta: C64) -> f64 {
    re_w_log_w(C64::new(1.0, 0.0) - zeta) - re_w_log_w(-zeta) - 1.0
}

/// `ζ` together with its potential mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogPotentialKernel {
    pub zeta: C64,
    pub i_value: f64,
}

impl LogPotentialKernel {
    pub fn new(zeta: C64) -> Self {
        LogPotentialKernel {
            zeta,
            i_value: log_potential_i(zeta),
        }
    }
}

/// Grid over real energies `E₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl EnergyGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![0.5 * (self.min + self.max)];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Grid value of `inf_{E₁} sup_{δ/2<y<δ} inf_{x∈[0,1]} |v(x+iy) − E₁|`.
///
/// This is a grid estimate only: the outer infimum is taken over finitely
/// many `E₁` and the inner infimum over finitely many `x`, so no certified
/// lower bound is implied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Epsilon0Estimate {
    pub value: f64,
    /// Energy at which the outer infimum was attained.
    pub e1_at_inf: f64,
    pub delta: f64,
    pub x_grid: usize,
    pub y_grid: usize,
    pub energies: EnergyGrid,
    /// Set when the estimate is numerically zero (e.g. a constant potential).
    pub degenerate: bool,
}

pub fn epsilon0_estimate(
    v: &TrigPolynomial,
    delta: f64,
    energies: EnergyGrid,
    x_grid: usize,
    y_grid: usize,
) -> Result<Epsilon0Estimate, AnalyticError> {
    if !(delta > 0.0 && delta < v.rho()) {
        return Err(AnalyticError::InvalidInput(format!(
            "delta must lie in (0, rho = {}), got {delta}",
            v.rho()
        )));
    }
    if x_grid == 0 || y_grid == 0 || energies.count == 0 {
        return Err(AnalyticError::InvalidInput("grids must be nonempty".into()));
    }
    // interior points of the open interval (δ/2, δ)
    let ys: Vec<f64> = (0..y_grid)
        .map(|j| 0.5 * delta + 0.5 * delta * (j as f64 + 0.5) / y_grid as f64)
        .collect();
    // v on the (x, y) grid, shared by every energy
    let table: Vec<Vec<C64>> = ys
        .par_iter()
        .map(|&y| {
            (0..x_grid)
                .map(|i| v.eval(C64::new(i as f64 / x_grid as f64, y)))
                .collect()
        })
        .collect();
    let es = energies.points();
    let per_energy: Vec<f64> = es
        .par_iter()
        .map(|&e1| {
            table
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|val| (val - e1).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let (idx, value) = per_energy
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &val)| {
            if val < best.1 {
                (i, val)
            } else {
                best
            }
        });
    let scale = v.sup_norm_strip(delta, 64, 8).max(1.0);
    Ok(Epsilon0Estimate {
        value,
        e1_at_inf: es[idx],
        delta,
        x_grid,
        y_grid,
        energies,
        degenerate: value <= 1e-9 * scale,
    })
}

/// Default energy window for the outer infimum: `|E₁| ≤ sup_{|Im z|≤δ} |v| + 1`.
pub fn default_energy_grid(v: &TrigPolynomial, delta: f64, count: usize) -> EnergyGrid {
    let r = v.sup_norm_strip(delta, 256, 16) + 1.0;
    EnergyGrid {
        min: -r,
        max: r,
        count,
    }
}
