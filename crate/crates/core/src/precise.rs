//! Arbitrary-precision complex 2×2 arithmetic.
//!
//! Cocycle blocks of length `n` at coupling `λ` have norms near `λⁿ`, and the
//! Avalanche Principle bound `C m / γ` is then far below double resolution.
//! This module recomputes blocks and the residual with `astro-float`
//! mantissas of a chosen width.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::BigInt;

use crate::avalanche::{assemble, check_suite_len, APReport, AvalancheError, SuiteFactor};
use crate::cocycle::{CocycleError, Gauge, JacobiModel, SINGULAR_TOL};
use crate::linalg::Mat2;
use crate::{TrigPolynomial, C64};

const RM: RoundingMode = RoundingMode::ToEven;

/// Smallest supported mantissa width.
pub const MIN_BITS: usize = 128;

/// Nearest double (truncated beyond two words) of a finite `BigFloat`.
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((m, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let hi = m[m.len() - 1] as f64;
    let lo = if m.len() > 1 { m[m.len() - 2] as f64 } else { 0.0 };
    let mant = (hi + lo * 2f64.powi(-64)) * 2f64.powi(-64);
    // two half-steps keep the intermediate power of two representable
    let h = e / 2;
    let v = mant * 2f64.powi(h) * 2f64.powi(e - h);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Complex number with `BigFloat` parts.
#[derive(Debug, Clone)]
pub struct BComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

/// Complex 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone)]
pub struct PMat2 {
    pub a: BComplex,
    pub b: BComplex,
    pub c: BComplex,
    pub d: BComplex,
}

/// Working precision and constant cache.
pub struct Context {
    p: usize,
    cc: Consts,
}

impl Context {
    pub fn new(bits: usize) -> Self {
        Context {
            p: bits.max(MIN_BITS),
            cc: Consts::new().expect("astro-float constant cache"),
        }
    }

    pub fn bits(&self) -> usize {
        self.p
    }

    pub fn real(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.p)
    }

    pub fn complex(&self, z: C64) -> BComplex {
        BComplex {
            re: self.real(z.re),
            im: self.real(z.im),
        }
    }

    fn zero(&self) -> BComplex {
        self.complex(C64::new(0.0, 0.0))
    }

    pub fn integer(&mut self, n: &BigInt) -> BigFloat {
        BigFloat::parse(&n.to_string(), Radix::Dec, self.p, RM, &mut self.cc)
    }

    fn add(&self, x: &BComplex, y: &BComplex) -> BComplex {
        BComplex {
            re: x.re.add(&y.re, self.p, RM),
            im: x.im.add(&y.im, self.p, RM),
        }
    }

    fn sub(&self, x: &BComplex, y: &BComplex) -> BComplex {
        BComplex {
            re: x.re.sub(&y.re, self.p, RM),
            im: x.im.sub(&y.im, self.p, RM),
        }
    }

    fn mul(&self, x: &BComplex, y: &BComplex) -> BComplex {
        let p = self.p;
        BComplex {
            re: x.re.mul(&y.re, p, RM).sub(&x.im.mul(&y.im, p, RM), p, RM),
            im: x.re.mul(&y.im, p, RM).add(&x.im.mul(&y.re, p, RM), p, RM),
        }
    }

    fn scale(&self, x: &BComplex, s: &BigFloat) -> BComplex {
        BComplex {
            re: x.re.mul(s, self.p, RM),
            im: x.im.mul(s, self.p, RM),
        }
    }

    fn norm_sqr(&self, x: &BComplex) -> BigFloat {
        let p = self.p;
        x.re.mul(&x.re, p, RM).add(&x.im.mul(&x.im, p, RM), p, RM)
    }

    fn abs(&self, x: &BComplex) -> BigFloat {
        self.norm_sqr(x).sqrt(self.p, RM)
    }

    fn div(&self, x: &BComplex, y: &BComplex) -> BComplex {
        let den = self.norm_sqr(y);
        let conj = BComplex {
            re: y.re.clone(),
            im: y.im.neg(),
        };
        let num = self.mul(x, &conj);
        BComplex {
            re: num.re.div(&den, self.p, RM),
            im: num.im.div(&den, self.p, RM),
        }
    }

    pub fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(self.p, RM, &mut self.cc)
    }

    pub fn matrix(&self, m: &Mat2) -> PMat2 {
        PMat2 {
            a: self.complex(m.a),
            b: self.complex(m.b),
            c: self.complex(m.c),
            d: self.complex(m.d),
        }
    }

    pub fn identity(&self) -> PMat2 {
        self.matrix(&Mat2::identity())
    }

    pub fn mat_mul(&self, x: &PMat2, y: &PMat2) -> PMat2 {
        PMat2 {
            a: self.add(&self.mul(&x.a, &y.a), &self.mul(&x.b, &y.c)),
            b: self.add(&self.mul(&x.a, &y.b), &self.mul(&x.b, &y.d)),
            c: self.add(&self.mul(&x.c, &y.a), &self.mul(&x.d, &y.c)),
            d: self.add(&self.mul(&x.c, &y.b), &self.mul(&x.d, &y.d)),
        }
    }

    fn mat_scale(&self, x: &PMat2, s: &BComplex) -> PMat2 {
        PMat2 {
            a: self.mul(&x.a, s),
            b: self.mul(&x.b, s),
            c: self.mul(&x.c, s),
            d: self.mul(&x.d, s),
        }
    }

    pub fn det(&self, x: &PMat2) -> BComplex {
        self.sub(&self.mul(&x.a, &x.d), &self.mul(&x.b, &x.c))
    }

    /// `log‖x‖` from `σ₁² = (F + sqrt(F² − 4|det|²)) / 2`.
    pub fn log_norm(&mut self, x: &PMat2) -> BigFloat {
        let p = self.p;
        let f = self
            .norm_sqr(&x.a)
            .add(&self.norm_sqr(&x.b), p, RM)
            .add(&self.norm_sqr(&x.c), p, RM)
            .add(&self.norm_sqr(&x.d), p, RM);
        let det2 = self.norm_sqr(&self.det(x));
        let mut disc = f.mul(&f, p, RM).sub(&det2.mul(&self.real(4.0), p, RM), p, RM);
        if disc.is_negative() {
            disc = self.real(0.0);
        }
        let sigma2 = f.add(&disc.sqrt(p, RM), p, RM).mul(&self.real(0.5), p, RM);
        self.ln(&sigma2).mul(&self.real(0.5), p, RM)
    }

    /// `(cos 2πt, sin 2πt)`.
    fn unit_circle(&mut self, t: &BigFloat) -> BComplex {
        let p = self.p;
        let two_pi = self.cc.pi(p, RM).mul(&self.real(2.0), p, RM);
        let theta = t.fract().mul(&two_pi, p, RM);
        BComplex {
            re: theta.cos(p, RM, &mut self.cc),
            im: theta.sin(p, RM, &mut self.cc),
        }
    }

    /// `f(t)` for real `t`.
    pub fn eval_trig(&mut self, f: &TrigPolynomial, t: &BigFloat) -> BComplex {
        let mut acc = self.complex(f.coeff(0));
        if f.degree() == 0 {
            return acc;
        }
        let w = self.unit_circle(t);
        let mut wk = w.clone();
        for k in 1..=f.degree() as i64 {
            let wk_conj = BComplex {
                re: wk.re.clone(),
                im: wk.im.neg(),
            };
            acc = self.add(&acc, &self.mul(&self.complex(f.coeff(k)), &wk));
            acc = self.add(&acc, &self.mul(&self.complex(f.coeff(-k)), &wk_conj));
            wk = self.mul(&wk, &w);
        }
        acc
    }

    /// Exact frequency rounded to the working precision.
    pub fn omega(&mut self, model: &JacobiModel) -> BigFloat {
        let p = self.p;
        match model.frequency().exact_parts() {
            Some((r, s, d, den)) => {
                let r = self.integer(&r);
                let s = self.integer(&s);
                let den = self.integer(&den);
                let root = self.real(d as f64).sqrt(p, RM);
                r.add(&s.mul(&root, p, RM), p, RM).div(&den, p, RM)
            }
            None => self.real(model.omega()),
        }
    }

    /// `R(left) · diag(γ, 1/γ) · R(right)` with exact determinant one up to
    /// the working precision.
    pub fn suite_factor(&mut self, f: &SuiteFactor) -> PMat2 {
        let p = self.p;
        let rot = |ctx: &mut Context, angle: f64| {
            let th = ctx.real(angle);
            let c = th.cos(p, RM, &mut ctx.cc);
            let s = th.sin(p, RM, &mut ctx.cc);
            let z = ctx.real(0.0);
            PMat2 {
                a: BComplex { re: c.clone(), im: z.clone() },
                b: BComplex { re: s.neg(), im: z.clone() },
                c: BComplex { re: s, im: z.clone() },
                d: BComplex { re: c, im: z },
            }
        };
        let g = self.real(f.gamma);
        let ginv = self.real(1.0).div(&g, p, RM);
        let z = self.real(0.0);
        let diag = PMat2 {
            a: BComplex { re: g, im: z.clone() },
            b: self.zero(),
            c: self.zero(),
            d: BComplex { re: ginv, im: z },
        };
        let left = rot(self, f.left_angle);
        let right = rot(self, f.right_angle);
        let tmp = self.mat_mul(&left, &diag);
        self.mat_mul(&tmp, &right)
    }
}

/// Cocycle blocks `A_j = M_n(x + (j−1)nω)` at the working precision.
pub fn cocycle_blocks(
    ctx: &mut Context,
    model: &JacobiModel,
    x: f64,
    energy: f64,
    block_len: u64,
    num_blocks: usize,
    gauge: Gauge,
) -> Result<Vec<PMat2>, AvalancheError> {
    check_suite_len(num_blocks)?;
    if block_len == 0 {
        return Err(AvalancheError::InvalidInput("block length must be positive".into()));
    }
    let p = ctx.bits();
    let omega = ctx.omega(model);
    let x0 = ctx.real(x);
    let la = ctx.real(model.lambda_a());
    let lv = ctx.real(model.lambda_v());
    let e = ctx.complex(C64::new(energy, 0.0));
    let a_const = model.a().is_constant();
    let point = |ctx: &Context, k: u64| x0.add(&omega.mul(&ctx.real(k as f64), p, RM), p, RM);
    let eval_a = |ctx: &mut Context, k: u64| {
        let t = point(ctx, k);
        if a_const {
            ctx.complex(model.a().coeff(0))
        } else {
            ctx.eval_trig(model.a(), &t)
        }
    };

    let mut blocks = Vec::with_capacity(num_blocks);
    let mut a_here = eval_a(ctx, 1);
    for j in 0..num_blocks {
        let mut prod = ctx.identity();
        for i in 1..=block_len {
            let k = j as u64 * block_len + i;
            let t = point(ctx, k);
            let a_next = eval_a(ctx, k + 1);
            let lam_tilde = ctx.scale(
                &BComplex {
                    re: a_here.re.clone(),
                    im: a_here.im.neg(),
                },
                &la,
            );
            let lam_shift = ctx.scale(&a_next, &la);
            let v = ctx.eval_trig(model.v(), &t);
            let diag = ctx.sub(&ctx.scale(&v, &lv), &e);
            let step = PMat2 {
                a: diag,
                b: BComplex {
                    re: lam_tilde.re.neg(),
                    im: lam_tilde.im.neg(),
                },
                c: lam_shift.clone(),
                d: ctx.zero(),
            };
            let m1 = ctx.abs(&lam_shift);
            let m2 = ctx.abs(&lam_tilde);
            let singular = match gauge {
                Gauge::Analytic => false,
                Gauge::Raw => to_f64(&m1) < SINGULAR_TOL,
                Gauge::Unimodular => to_f64(&m1) < SINGULAR_TOL || to_f64(&m2) < SINGULAR_TOL,
            };
            if singular {
                return Err(AvalancheError::SingularBlock {
                    block: j + 1,
                    source: CocycleError::SingularStep {
                        k: i,
                        z: C64::new(to_f64(&t), 0.0),
                    },
                });
            }
            let step = match gauge {
                Gauge::Analytic => step,
                Gauge::Raw => {
                    let one = ctx.complex(C64::new(1.0, 0.0));
                    let inv = ctx.div(&one, &lam_shift);
                    ctx.mat_scale(&step, &inv)
                }
                Gauge::Unimodular => {
                    let f = ctx.real(1.0).div(&m1.mul(&m2, p, RM).sqrt(p, RM), p, RM);
                    let z = ctx.real(0.0);
                    ctx.mat_scale(&step, &BComplex { re: f, im: z })
                }
            };
            prod = ctx.mat_mul(&step, &prod);
            a_here = a_next;
        }
        blocks.push(prod);
    }
    Ok(blocks)
}

/// Avalanche Principle check at the working precision.
pub fn ap_check_precise(
    ctx: &mut Context,
    blocks: &[PMat2],
    c_test: f64,
) -> Result<APReport, AvalancheError> {
    check_suite_len(blocks.len())?;
    if !(c_test > 0.0) {
        return Err(AvalancheError::InvalidInput("C_test must be positive".into()));
    }
    let p = ctx.bits();
    let norms: Vec<BigFloat> = blocks.iter().map(|b| ctx.log_norm(b)).collect();
    let mut pairs = Vec::with_capacity(blocks.len() - 1);
    for w in blocks.windows(2) {
        let m = ctx.mat_mul(&w[1], &w[0]);
        pairs.push(ctx.log_norm(&m));
    }
    let mut prod = blocks[0].clone();
    for b in &blocks[1..] {
        prod = ctx.mat_mul(b, &prod);
    }
    let mut lhs = ctx.log_norm(&prod);
    for l in &norms[1..norms.len() - 1] {
        lhs = lhs.add(l, p, RM);
    }
    for q in &pairs {
        lhs = lhs.sub(q, p, RM);
    }
    let residual = lhs.abs();
    let log_residual = if residual.is_zero() {
        f64::NEG_INFINITY
    } else {
        to_f64(&ctx.ln(&residual))
    };

    let mut max_gap = f64::NEG_INFINITY;
    for j in 0..blocks.len() - 1 {
        let g = norms[j + 1].add(&norms[j], p, RM).sub(&pairs[j], p, RM);
        max_gap = max_gap.max(to_f64(&g));
    }
    let mut log_det = f64::NEG_INFINITY;
    for b in blocks {
        let d2 = ctx.norm_sqr(&ctx.det(b));
        let ld = if d2.is_zero() {
            f64::NEG_INFINITY
        } else {
            0.5 * to_f64(&ctx.ln(&d2))
        };
        log_det = log_det.max(ld);
    }
    let log_norms: Vec<f64> = norms.iter().map(to_f64).collect();
    Ok(assemble(
        &log_norms,
        max_gap,
        log_det,
        to_f64(&residual),
        log_residual,
        c_test,
        p,
    ))
}

/// Mantissa width resolving residuals well below `n / γ` for blocks with
/// `log γ ≈ log_gamma` and products of `log_total ≈ Σ log‖A_j‖`.
pub fn bits_for(log_gamma: f64, log_total: f64) -> usize {
    let need = (2.0 * log_gamma.max(0.0) + log_total.abs().max(1.0).ln()) / std::f64::consts::LN_2 + 128.0;
    let bits = (need.ceil() as usize).max(MIN_BITS);
    bits.div_ceil(64) * 64
}
