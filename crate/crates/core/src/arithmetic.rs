//! Continued-fraction arithmetic of the rotation number ω.
//!
//! Frequencies come in three flavours: eventually periodic continued
//! fractions `[0; a_1, …, a_m, t, t, t, …]` (quadratic irrationals, handled
//! exactly), exact rationals, and plain floats. The float path expands the
//! exact dyadic value of the `f64` and stops once the convergent reproduces
//! ω to within four ulps; later quotients would only describe rounding noise.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArithmeticError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("β̂ is undefined for a terminating (rational) expansion")]
    Terminating,
    #[error("β̂ needs at least two convergents, got {0}")]
    TooShort(usize),
    #[error("exact bound check needs an exact frequency (quadratic or rational)")]
    NotExact,
}

/// A rotation number in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub enum Frequency {
    /// `[0; prefix…, tail, tail, …]`, a quadratic irrational.
    Quadratic { prefix: Vec<u64>, tail: u64 },
    /// `p / q` in lowest terms.
    Rational { p: u64, q: u64 },
    Float(f64),
}

impl Frequency {
    /// `(√5 − 1) / 2 = [0; 1, 1, 1, …]`.
    pub fn golden() -> Self {
        Frequency::Quadratic {
            prefix: Vec::new(),
            tail: 1,
        }
    }

    /// `√2 − 1 = [0; 2, 2, 2, …]`.
    pub fn sqrt2_minus_1() -> Self {
        Frequency::Quadratic {
            prefix: Vec::new(),
            tail: 2,
        }
    }

    /// Eventually periodic expansion `[0; prefix…, tail, tail, …]`.
    pub fn quadratic(prefix: Vec<u64>, tail: u64) -> Result<Self, ArithmeticError> {
        if tail == 0 || prefix.iter().any(|&a| a == 0) {
            return Err(ArithmeticError::Domain(
                "partial quotients must be positive".into(),
            ));
        }
        Ok(Frequency::Quadratic { prefix, tail })
    }

    pub fn rational(p: u64, q: u64) -> Result<Self, ArithmeticError> {
        if q == 0 || p == 0 || p >= q {
            return Err(ArithmeticError::Domain(format!(
                "rational frequency {p}/{q} is not in (0, 1)"
            )));
        }
        let g = p.gcd(&q);
        Ok(Frequency::Rational { p: p / g, q: q / g })
    }

    pub fn float(omega: f64) -> Result<Self, ArithmeticError> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(ArithmeticError::Domain(format!(
                "frequency {omega} is not in (0, 1)"
            )));
        }
        Ok(Frequency::Float(omega))
    }

    /// Nearest double to the frequency.
    pub fn value(&self) -> f64 {
        match self {
            Frequency::Quadratic { prefix, tail } => {
                let k = *tail as f64;
                let alpha = 0.5 * (k + (k * k + 4.0).sqrt());
                let (mut p0, mut q0, mut p1, mut q1) = (1.0f64, 0.0f64, 0.0f64, 1.0f64);
                for &a in prefix {
                    let a = a as f64;
                    let (p2, q2) = (a * p1 + p0, a * q1 + q0);
                    p0 = p1;
                    q0 = q1;
                    p1 = p2;
                    q1 = q2;
                }
                (alpha * p1 + p0) / (alpha * q1 + q0)
            }
            Frequency::Rational { p, q } => *p as f64 / *q as f64,
            Frequency::Float(w) => *w,
        }
    }

    /// The rotation `x ↦ x + ω` used for orbit evaluation.
    pub fn rotation(&self) -> Rotation {
        match self {
            Frequency::Rational { p, q } => Rotation::rational(*p, *q),
            _ => Rotation::new(self.value()),
        }
    }

    /// Exact value as `(r, s, d, den)` with `ω = (r + s√d) / den`; `None`
    /// for a float frequency.
    pub fn exact_parts(&self) -> Option<(BigInt, BigInt, u64, BigInt)> {
        self.surd().map(|s| (s.r, s.s, s.d, s.den))
    }

    /// Exact value as a quadratic surd, when one exists.
    fn surd(&self) -> Option<Surd> {
        match self {
            Frequency::Quadratic { prefix, tail } => Some(Surd::from_periodic(prefix, *tail)),
            Frequency::Rational { p, q } => Some(Surd {
                r: BigInt::from(*p),
                s: BigInt::zero(),
                d: 0,
                den: BigInt::from(*q),
            }),
            Frequency::Float(_) => None,
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Quadratic { prefix, tail } if prefix.is_empty() && *tail == 1 => {
                write!(f, "golden")
            }
            Frequency::Quadratic { prefix, tail } if prefix.is_empty() && *tail == 2 => {
                write!(f, "sqrt2m1")
            }
            Frequency::Quadratic { prefix, tail } => {
                let head: Vec<String> = prefix.iter().map(|a| a.to_string()).collect();
                write!(f, "cf:{};{}", head.join(","), tail)
            }
            Frequency::Rational { p, q } => write!(f, "{p}/{q}"),
            Frequency::Float(w) => write!(f, "{w:?}"),
        }
    }
}

impl FromStr for Frequency {
    type Err = ArithmeticError;

    /// Accepts `golden`, `sqrt2m1`, `p/q`, `cf:a1,a2,…;t` and decimals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ArithmeticError::Domain(format!("cannot parse frequency {s:?}"));
        match s {
            "golden" => return Ok(Frequency::golden()),
            "sqrt2m1" => return Ok(Frequency::sqrt2_minus_1()),
            _ => {}
        }
        if let Some(body) = s.strip_prefix("cf:") {
            let (head, tail) = body.split_once(';').ok_or_else(bad)?;
            let prefix = if head.trim().is_empty() {
                Vec::new()
            } else {
                head.split(',')
                    .map(|a| a.trim().parse::<u64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let tail = tail.trim().parse::<u64>().map_err(|_| bad())?;
            return Frequency::quadratic(prefix, tail);
        }
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<u64>().map_err(|_| bad())?;
            let q = q.trim().parse::<u64>().map_err(|_| bad())?;
            return Frequency::rational(p, q);
        }
        let w = s.parse::<f64>().map_err(|_| bad())?;
        Frequency::float(w)
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fractional part of `k * omega`, computed from an exact two-product so the
/// error does not grow with `k`.
fn frac_mul(k: u64, omega: f64) -> f64 {
    let kf = k as f64;
    let hi = kf * omega;
    let lo = kf.mul_add(omega, -hi);
    let t = (hi - hi.floor()) + lo;
    t.rem_euclid(1.0)
}

/// Orbit generator for `x ↦ x + ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    omega: f64,
    exact: Option<(u64, u64)>,
}

impl Rotation {
    pub fn new(omega: f64) -> Self {
        Rotation { omega, exact: None }
    }

    /// Rational rotation by `p / q`, evaluated exactly modulo 1.
    pub fn rational(p: u64, q: u64) -> Self {
        Rotation {
            omega: p as f64 / q as f64,
            exact: Some((p, q)),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn exact(&self) -> Option<(u64, u64)> {
        self.exact
    }

    /// `{k ω}`.
    pub fn frac_step(&self, k: u64) -> f64 {
        match self.exact {
            Some((p, q)) => ((k as u128 * p as u128) % q as u128) as f64 / q as f64,
            None => frac_mul(k, self.omega),
        }
    }

    /// `{x + k ω}` in `[0, 1)`.
    pub fn point(&self, x: f64, k: u64) -> f64 {
        let t = (x.rem_euclid(1.0) + self.frac_step(k)).rem_euclid(1.0);
        if t >= 1.0 {
            0.0
        } else {
            t
        }
    }
}

/// Distance on ℝ/ℤ, in `[0, 1/2]`.
pub fn torus_distance(x: f64, y: f64) -> f64 {
    // |x − y| keeps the result exactly symmetric in its arguments
    let t = (x - y).abs().rem_euclid(1.0);
    t.min(1.0 - t)
}

/// `k0 ∈ [0, count)` minimising `‖x + kω − ξ‖`, with the minimal distance.
/// Ties go to the smallest index.
pub fn nearest_orbit_index(x: f64, xi: f64, count: u64, rotation: &Rotation) -> (u64, f64) {
    assert!(count >= 1, "nearest_orbit_index needs count >= 1");
    let mut best = (0u64, torus_distance(rotation.point(x, 0), xi));
    for k in 1..count {
        let d = torus_distance(rotation.point(x, k), xi);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: u128,
    pub q: u128,
}

/// Why the expansion stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Depth,
    FloatResolution,
    Terminated,
    Overflow,
}

/// Continued-fraction data of a frequency, truncated at some depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CFExpansion {
    pub omega: f64,
    pub frequency: Frequency,
    /// `a_1, …, a_S`.
    pub quotients: Vec<u64>,
    /// `p_s / q_s` for `s = 1..=S`.
    pub convergents: Vec<Convergent>,
    /// `log(q_{s+1}) / q_s` for `s = 1..S`.
    pub gap_exponents: Vec<f64>,
    pub beta_hat: Option<f64>,
    pub terminating: bool,
    pub truncation: Truncation,
}

/// Truncated Liouville exponent with where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaHat {
    pub value: f64,
    /// Index `s` (1-based) of the maximising gap.
    pub attained_at: usize,
    pub depth: usize,
    /// The last (up to three) gap exponents, a proxy for the lim sup.
    pub tail: Vec<f64>,
}

impl CFExpansion {
    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    pub fn rotation(&self) -> Rotation {
        self.frequency.rotation()
    }

    /// Denominators `q_1, …, q_S`.
    pub fn denominators(&self) -> Vec<u128> {
        self.convergents.iter().map(|c| c.q).collect()
    }

    /// Check `1/(q_s(q_{s+1}+q_s)) < |ω − p_s/q_s| < 1/(q_s q_{s+1})` in exact
    /// integer arithmetic for every `s` with a successor. Returns, per `s`,
    /// whether the lower and upper inequality hold.
    pub fn exact_bounds(&self) -> Result<Vec<(bool, bool)>, ArithmeticError> {
        let surd = self.frequency.surd().ok_or(ArithmeticError::NotExact)?;
        Ok(self
            .convergents
            .windows(2)
            .map(|w| surd.convergent_bounds(w[0], w[1].q))
            .collect())
    }
}

/// Expand `frequency` to at most `depth` partial quotients.
pub fn cf_expand(frequency: &Frequency, depth: usize) -> Result<CFExpansion, ArithmeticError> {
    if depth == 0 {
        return Err(ArithmeticError::Domain("depth must be at least 1".into()));
    }
    let omega = frequency.value();
    if !(omega > 0.0 && omega < 1.0) {
        return Err(ArithmeticError::Domain(format!(
            "frequency {omega} is not in (0, 1)"
        )));
    }
    let mut builder = ConvergentBuilder::default();
    let mut truncation = Truncation::Depth;
    let mut terminating = false;

    match frequency {
        Frequency::Quadratic { prefix, tail } => {
            for s in 0..depth {
                let a = prefix.get(s).copied().unwrap_or(*tail);
                if !builder.push(a) {
                    truncation = Truncation::Overflow;
                    break;
                }
            }
        }
        Frequency::Rational { p, q } => {
            let (mut num, mut den) = (*q as u128, *p as u128);
            loop {
                if builder.len() == depth {
                    break;
                }
                let a = num / den;
                let r = num % den;
                if !builder.push(a as u64) {
                    truncation = Truncation::Overflow;
                    break;
                }
                if r == 0 {
                    terminating = true;
                    truncation = Truncation::Terminated;
                    break;
                }
                num = den;
                den = r;
            }
        }
        Frequency::Float(w) => {
            // Exact dyadic value of the double: w = m / 2^e.
            let (m, e) = dyadic(*w);
            let (mut num, mut den) = (BigUint::one() << e, m);
            let ulp = w.next_up() - w;
            loop {
                if builder.len() == depth {
                    break;
                }
                let (a, r) = num.div_rem(&den);
                let Some(a) = a.to_u64() else {
                    truncation = Truncation::Overflow;
                    break;
                };
                if !builder.push(a) {
                    truncation = Truncation::Overflow;
                    break;
                }
                let c = builder.last().expect("pushed");
                if r.is_zero() || (c.p as f64 / c.q as f64 - w).abs() <= 4.0 * ulp {
                    truncation = Truncation::FloatResolution;
                    break;
                }
                num = den;
                den = r;
            }
        }
    }

    let quotients = builder.quotients;
    let convergents = builder.convergents;
    let gap_exponents: Vec<f64> = convergents
        .windows(2)
        .map(|w| (w[1].q as f64).ln() / w[0].q as f64)
        .collect();
    let beta_hat = if terminating || gap_exponents.is_empty() {
        None
    } else {
        Some(gap_exponents.iter().cloned().fold(0.0, f64::max))
    };
    Ok(CFExpansion {
        omega,
        frequency: frequency.clone(),
        quotients,
        convergents,
        gap_exponents,
        beta_hat,
        terminating,
        truncation,
    })
}

/// `max_s log(q_{s+1}) / q_s` over the truncation.
pub fn beta_hat(cf: &CFExpansion) -> Result<BetaHat, ArithmeticError> {
    if cf.terminating {
        return Err(ArithmeticError::Terminating);
    }
    if cf.convergents.len() < 2 {
        return Err(ArithmeticError::TooShort(cf.convergents.len()));
    }
    let (idx, value) = cf
        .gap_exponents
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &g)| {
            if g > best.1 {
                (i, g)
            } else {
                best
            }
        });
    let start = cf.gap_exponents.len().saturating_sub(3);
    Ok(BetaHat {
        value: value.max(0.0),
        attained_at: idx + 1,
        depth: cf.depth(),
        tail: cf.gap_exponents[start..].to_vec(),
    })
}

/// Result of an exhaustive scan of the strong Diophantine condition
/// `‖nω‖ ≥ c_ω / (n (log n)^α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiophantineCheck {
    pub c_omega: f64,
    pub alpha: f64,
    pub n_max: u64,
    pub violations: Vec<u64>,
}

impl DiophantineCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn diophantine_check(
    cf: &CFExpansion,
    c_omega: f64,
    alpha: f64,
    n_max: u64,
) -> Result<DiophantineCheck, ArithmeticError> {
    if !(c_omega > 0.0 && alpha > 0.0) {
        return Err(ArithmeticError::Domain(
            "c_omega and alpha must be positive".into(),
        ));
    }
    let rot = cf.rotation();
    let violations = (2..=n_max)
        .filter(|&n| {
            let t = rot.frac_step(n);
            let dist = t.min(1.0 - t);
            let nf = n as f64;
            dist < c_omega / (nf * nf.ln().powf(alpha))
        })
        .collect();
    Ok(DiophantineCheck {
        c_omega,
        alpha,
        n_max,
        violations,
    })
}

#[derive(Default)]
struct ConvergentBuilder {
    quotients: Vec<u64>,
    convergents: Vec<Convergent>,
    // (p_{s-1}, q_{s-1}), (p_{s-2}, q_{s-2}); seeded with p_0/q_0 = 0/1 and p_{-1}/q_{-1} = 1/0.
    prev: Option<((u128, u128), (u128, u128))>,
}

impl ConvergentBuilder {
    fn len(&self) -> usize {
        self.quotients.len()
    }

    fn last(&self) -> Option<Convergent> {
        self.convergents.last().copied()
    }

    /// Returns false on u128 overflow, leaving the builder unchanged.
    fn push(&mut self, a: u64) -> bool {
        let ((p1, q1), (p0, q0)) = self.prev.unwrap_or(((0, 1), (1, 0)));
        let a = a as u128;
        let next = a
            .checked_mul(p1)
            .and_then(|v| v.checked_add(p0))
            .zip(a.checked_mul(q1).and_then(|v| v.checked_add(q0)));
        let Some((p, q)) = next else {
            return false;
        };
        self.quotients.push(a as u64);
        self.convergents.push(Convergent { p, q });
        self.prev = Some(((p, q), (p1, q1)));
        true
    }
}

/// `w = m / 2^e` exactly, for a positive finite double.
fn dyadic(w: f64) -> (BigUint, usize) {
    let bits = w.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    debug_assert!(exp < 0, "w < 1 has a negative binary exponent");
    let mut m = BigUint::from(mant);
    let mut e = (-exp) as usize;
    while e > 0 && (&m & BigUint::one()).is_zero() {
        m >>= 1;
        e -= 1;
    }
    (m, e)
}

/// `(r + s √d) / den` with `den > 0`; `d = 0` encodes a rational.
#[derive(Debug, Clone)]
struct Surd {
    r: BigInt,
    s: BigInt,
    d: u64,
    den: BigInt,
}

/// Sign of `x + y √d` in exact arithmetic.
fn surd_sign(x: &BigInt, y: &BigInt, d: u64) -> Sign {
    if d == 0 || y.is_zero() {
        return x.sign();
    }
    let d = BigInt::from(d);
    match (x.sign(), y.sign()) {
        (Sign::NoSign, s) => s,
        (Sign::Plus, Sign::Plus) => Sign::Plus,
        (Sign::Minus, Sign::Minus) => Sign::Minus,
        (Sign::Plus, Sign::Minus) => (x * x - y * y * &d).sign(),
        (Sign::Minus, Sign::Plus) => (y * y * &d - x * x).sign(),
        (_, Sign::NoSign) => x.sign(),
    }
}

impl Surd {
    /// Value of `[0; prefix…, k, k, k, …]`.
    fn from_periodic(prefix: &[u64], k: u64) -> Surd {
        // Complete quotient α = (k + √(k² + 4)) / 2 and
        // ω = (α p_m + p_{m-1}) / (α q_m + q_{m-1}).
        let (mut p0, mut q0, mut p1, mut q1) = (
            BigInt::one(),
            BigInt::zero(),
            BigInt::zero(),
            BigInt::one(),
        );
        for &a in prefix {
            let a = BigInt::from(a);
            let p2 = &a * &p1 + &p0;
            let q2 = &a * &q1 + &q0;
            p0 = std::mem::replace(&mut p1, p2);
            q0 = std::mem::replace(&mut q1, q2);
        }
        let kb = BigInt::from(k);
        let d = k * k + 4;
        // numerator A + B√d, denominator C + E√d (common factor 1/2 cancels)
        let a = &kb * &p1 + BigInt::from(2) * &p0;
        let b = p1.clone();
        let c = &kb * &q1 + BigInt::from(2) * &q0;
        let e = q1.clone();
        let db = BigInt::from(d);
        let mut r = &a * &c - &b * &e * &db;
        let mut s = &b * &c - &a * &e;
        let mut den = &c * &c - &e * &e * &db;
        if den.is_negative() {
            r = -r;
            s = -s;
            den = -den;
        }
        Surd { r, s, d, den }
    }

    /// Lower and upper convergent inequality for `conv` with next denominator `q_next`.
    fn convergent_bounds(&self, conv: Convergent, q_next: u128) -> (bool, bool) {
        let p = BigInt::from(conv.p);
        let q = BigInt::from(conv.q);
        let qn = BigInt::from(q_next);
        // ω − p/q = (X + Y√d) / (q · den)
        let x = &q * &self.r - &p * &self.den;
        let y = &q * &self.s;
        let sigma = match surd_sign(&x, &y, self.d) {
            Sign::Plus => BigInt::one(),
            Sign::Minus => -BigInt::one(),
            Sign::NoSign => return (false, true),
        };
        // |ω − p/q| > 1/(q(q'+q))  ⇔  σ(X + Y√d)(q'+q) − den > 0
        let k_lo = &sigma * (&qn + &q);
        let lower = surd_sign(&(&k_lo * &x - &self.den), &(&k_lo * &y), self.d) == Sign::Plus;
        // |ω − p/q| < 1/(q q')  ⇔  den − σ(X + Y√d) q' > 0
        let k_hi = &sigma * &qn;
        let upper = surd_sign(&(&self.den - &k_hi * &x), &(-(&k_hi * &y)), self.d) == Sign::Plus;
        (lower, upper)
    }
}
