//! Complex 2×2 matrices with closed-form spectral norm.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::C64;

/// `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(
            C64::new(a, 0.0),
            C64::new(b, 0.0),
            C64::new(c, 0.0),
            C64::new(d, 0.0),
        )
    }

    pub fn identity() -> Self {
        Mat2::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::real(x, 0.0, 0.0, y)
    }

    /// Rotation by `theta` (radians).
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::real(c, -s, s, c)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Largest singular value, `(sqrt(F + 2|det|) + sqrt(F − 2|det|)) / 2`
    /// with `F` the squared Frobenius norm.
    pub fn spectral_norm(&self) -> f64 {
        // Rescale so that squaring neither overflows nor underflows.
        let m = self
            .a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm());
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        let u = self.scale(1.0 / m);
        // After a phase turn making det real and positive,
        // F ∓ 2|det| = |a ∓ d̄|² + |b ± c̄|², free of cancellation.
        let det = u.det();
        let r = det.norm();
        let u = if r > 0.0 {
            u.scale_complex((det.conj() / r).sqrt())
        } else {
            u
        };
        let plus = (u.a + u.d.conj()).norm_sqr() + (u.b - u.c.conj()).norm_sqr();
        let minus = (u.a - u.d.conj()).norm_sqr() + (u.b + u.c.conj()).norm_sqr();
        m * 0.5 * (plus.sqrt() + minus.sqrt())
    }

    /// Smallest singular value, `|det| / σ₁`.
    pub fn min_singular_value(&self) -> f64 {
        let n = self.spectral_norm();
        if n == 0.0 {
            0.0
        } else {
            self.det().norm() / n
        }
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (self.a - other.a)
            .norm()
            .max((self.b - other.b).norm())
            .max((self.c - other.c).norm())
            .max((self.d - other.d).norm())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}
