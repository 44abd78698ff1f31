#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, TAU};

use cocycle_core::{Frequency, JacobiModel, Mat2, TrigPolynomial, C64};
use rand::Rng;

/// Tanh-sinh quadrature of `g` over `(0, len)`. Abscissae are generated as
/// offsets from 0, so a logarithmic singularity at the left end is resolved.
pub fn tanh_sinh<F: Fn(f64) -> f64>(g: F, len: f64) -> f64 {
    let h = 1.0 / 128.0;
    let mut acc = 0.0;
    let kmax = (6.0 / h) as i64;
    for k in -kmax..=kmax {
        let s = k as f64 * h;
        let u = FRAC_PI_2 * s.sinh();
        let y = len / (1.0 + (-2.0 * u).exp());
        let w = h * len * FRAC_PI_2 * s.cosh() / (2.0 * u.cosh().powi(2));
        if y > 0.0 && y < len && w > 0.0 {
            acc += w * g(y);
        }
    }
    acc
}

/// `∫₀¹ log|y − ζ| dy` by quadrature, split at `Re ζ` when it lies inside.
pub fn potential_quadrature(zeta: C64) -> f64 {
    let (xi, eta) = (zeta.re, zeta.im);
    let g = |t: f64| t.hypot(eta).ln();
    if xi > 0.0 && xi < 1.0 {
        tanh_sinh(g, xi) + tanh_sinh(g, 1.0 - xi)
    } else {
        tanh_sinh(|y| (C64::new(y, 0.0) - zeta).norm().ln(), 1.0)
    }
}

/// Largest singular value by power iteration on `A^* A`.
pub fn power_norm(m: &Mat2) -> f64 {
    let h = Mat2::new(m.a.conj(), m.c.conj(), m.b.conj(), m.d.conj()) * *m;
    let mut v = (C64::new(0.6, 0.1), C64::new(-0.3, 0.7));
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = (h.a * v.0 + h.b * v.1, h.c * v.0 + h.d * v.1);
        let n = (w.0.norm_sqr() + w.1.norm_sqr()).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        lambda = n;
        v = (w.0 / n, w.1 / n);
    }
    lambda.sqrt()
}

/// `∏_{k=n}^{1} step(x + kω)` by plain multiplication, with the step built
/// directly from the coefficient formulas.
pub fn naive_product(model: &JacobiModel, x: f64, energy: f64, n: u64, unimodular: bool) -> Mat2 {
    let w = model.omega();
    let la = model.lambda_a();
    let mut prod = Mat2::identity();
    for k in 1..=n {
        let z = x + k as f64 * w;
        let a_shift = la * model.a().eval_real(z + w);
        let a_tilde = la * model.a().eval_real(z).conj();
        let mut step = Mat2::new(
            model.lambda_v() * model.v().eval_real(z) - energy,
            -a_tilde,
            a_shift,
            C64::new(0.0, 0.0),
        );
        if unimodular {
            step = step.scale(1.0 / (a_shift.norm() * a_tilde.norm()).sqrt());
        }
        prod = step * prod;
    }
    prod
}

/// `Σ_{k<n} log|x + kω − ζ|` with `{·}` taken by `rem_euclid`.
pub fn enumerate_kernel_sum(zeta: C64, x: f64, n: u64, omega: f64) -> f64 {
    (0..n)
        .map(|k| (C64::new((x + k as f64 * omega).rem_euclid(1.0), 0.0) - zeta).norm().ln())
        .sum()
}

pub fn amo(lambda: f64) -> JacobiModel {
    JacobiModel::schrodinger(lambda, TrigPolynomial::cosine(1.0, 0.5).unwrap(), &Frequency::golden()).unwrap()
}

pub fn free_model() -> JacobiModel {
    JacobiModel::schrodinger(1.0, TrigPolynomial::new(&[], 0.5).unwrap(), &Frequency::golden()).unwrap()
}

/// Random real potential of degree at most `deg`.
pub fn random_real_poly<R: Rng>(rng: &mut R, deg: i64, rho: f64) -> TrigPolynomial {
    let mut terms = vec![(0, C64::new(rng.gen_range(-1.0..1.0), 0.0))];
    for k in 1..=deg {
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        terms.push((k, c));
        terms.push((-k, c.conj()));
    }
    TrigPolynomial::new(&terms, rho).unwrap()
}

/// Random complex off-diagonal function bounded away from zero on the
/// real axis: a dominant constant plus a small perturbation.
pub fn random_hopping<R: Rng>(rng: &mut R, deg: i64, rho: f64) -> TrigPolynomial {
    let base = C64::from_polar(1.0, rng.gen::<f64>() * TAU);
    let mut terms = vec![(0, base)];
    for k in 1..=deg {
        let scale = 0.4 / deg as f64;
        terms.push((k, C64::from_polar(scale * rng.gen::<f64>(), rng.gen::<f64>() * TAU)));
        terms.push((-k, C64::from_polar(scale * rng.gen::<f64>(), rng.gen::<f64>() * TAU)));
    }
    TrigPolynomial::new(&terms, rho).unwrap()
}

pub fn random_frequency<R: Rng>(rng: &mut R) -> Frequency {
    match rng.gen_range(0..3) {
        0 => Frequency::golden(),
        1 => Frequency::sqrt2_minus_1(),
        _ => Frequency::float(rng.gen_range(0.05..0.95)).unwrap(),
    }
}

/// A Jacobi model with random couplings, hopping and potential.
pub fn random_model<R: Rng>(rng: &mut R) -> JacobiModel {
    let rho = 0.5;
    let (da, dv) = (rng.gen_range(1..=2), rng.gen_range(1..=3));
    let a = random_hopping(rng, da, rho);
    let v = random_real_poly(rng, dv, rho);
    let freq = random_frequency(rng);
    JacobiModel::new(rng.gen_range(0.5..2.0), a, rng.gen_range(0.5..10.0), v, &freq).unwrap()
}
