//! Amplitude number types: the exact ring Q[sqrt2, sqrt3] and a complex
//! float mirror.
//!
//! An exact amplitude is `a + b*sqrt2 + c*sqrt3 + d*sqrt6` with
//! arbitrary-precision rational coefficients.  The four basis elements are
//! linearly independent over Q, so equality is coefficient-wise and a value
//! is zero exactly when all four coefficients vanish.  This makes
//! interference cancellation a structural fact rather than a numerical
//! accident.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, the coefficient field of [`QuadAmp`].
pub type Rat = BigRational;

/// Shorthand for a small rational constant.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

const SQRT2: f64 = core::f64::consts::SQRT_2;
const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT6: f64 = 2.449_489_742_783_178;

/// Absolute tolerance for treating a float amplitude as an exact zero when
/// pruning state-vector terms.
pub const PRUNE_EPS: f64 = 1e-12;

/// Absolute tolerance for float-mode probability classification
/// (probability-one, probability-zero and defect-zero decisions).
pub const PROB_EPS: f64 = 1e-9;

/// Common interface of the exact and float amplitude backends.
///
/// Probabilities are represented in the same type as amplitudes (they are
/// real, so the float backend keeps a zero imaginary part and the exact
/// backend is real throughout).
pub trait Amplitude: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero() -> Self;
    fn one() -> Self;
    /// `1/sqrt2`, the basis-rotation coefficient.
    fn sqrt1_2() -> Self;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn conj(&self) -> Self;
    /// `|self|^2` as a real probability weight.
    fn abs_sq(&self) -> Self;

    /// True when the value is an exact zero (float backend: below the
    /// pruning tolerance).
    fn is_zero(&self) -> bool;

    /// Embedding of an exact amplitude into this backend.
    fn from_quad(q: &QuadAmp) -> Self;
    /// `magnitude * e^(i*phase)`.  The exact backend only supports
    /// `phase == 0`.
    fn from_polar(magnitude: &QuadAmp, phase: f64) -> Option<Self>;
    /// `(cos theta, sin theta)` for a rotated measurement axis.  The exact
    /// backend supports `theta` in `{0, pi/4, pi/2}`.
    fn axis_coefficients(theta: f64) -> Option<(Self, Self)>;

    /// `1/sqrt(p)` for a probability `p > 0`; `None` when the result does
    /// not exist in the backend (exact mode: `p` not of the form `s^2`,
    /// `2 s^2`, `3 s^2` or `6 s^2` with rational `s`).
    fn inv_sqrt_prob(&self) -> Option<Self>;
    /// Probability ratio `num / den`; `None` when the denominator is zero
    /// or (exact mode) carries radical parts.
    fn prob_ratio(num: &Self, den: &Self) -> Option<Self>;

    /// Probability equality at the backend's classification tolerance.
    fn prob_eq(&self, other: &Self) -> bool;
    /// Sign of a real probability-like value at the classification
    /// tolerance: -1, 0 or +1.
    fn prob_sign(&self) -> i8;

    /// Real part as a float (probabilities: the value itself).
    fn to_f64(&self) -> f64;

    fn prob_is_one(&self) -> bool {
        self.prob_eq(&Self::one())
    }
    fn prob_is_zero(&self) -> bool {
        self.prob_sign() == 0
    }
}

/// Exact amplitude `a + b*sqrt2 + c*sqrt3 + d*sqrt6` over Q.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct QuadAmp {
    a: Rat,
    b: Rat,
    c: Rat,
    d: Rat,
}

impl QuadAmp {
    pub fn new(a: Rat, b: Rat, c: Rat, d: Rat) -> Self {
        QuadAmp { a, b, c, d }
    }

    /// Purely rational value.
    pub fn rational(a: Rat) -> Self {
        QuadAmp { a, ..Self::default() }
    }

    /// `r * sqrt2`.
    pub fn sqrt2_times(b: Rat) -> Self {
        QuadAmp { b, ..Self::default() }
    }

    /// `r * sqrt3`.
    pub fn sqrt3_times(c: Rat) -> Self {
        QuadAmp { c, ..Self::default() }
    }

    /// `r * sqrt6`.
    pub fn sqrt6_times(d: Rat) -> Self {
        QuadAmp { d, ..Self::default() }
    }

    /// `1/sqrt2 = sqrt2/2`.
    pub fn inv_sqrt2() -> Self {
        Self::sqrt2_times(rat(1, 2))
    }

    /// `1/sqrt3 = sqrt3/3`.
    pub fn inv_sqrt3() -> Self {
        Self::sqrt3_times(rat(1, 3))
    }

    /// `1/sqrt6 = sqrt6/6`.
    pub fn inv_sqrt6() -> Self {
        Self::sqrt6_times(rat(1, 6))
    }

    /// `1/sqrt12 = sqrt3/6`.
    pub fn inv_sqrt12() -> Self {
        Self::sqrt3_times(rat(1, 6))
    }

    /// Coefficients `(1, sqrt2, sqrt3, sqrt6)` in that order.
    pub fn coefficients(&self) -> (&Rat, &Rat, &Rat, &Rat) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    /// True when the three radical coefficients vanish.
    pub fn is_rational(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }

    /// The rational part when [`is_rational`](Self::is_rational) holds.
    pub fn as_rational(&self) -> Option<&Rat> {
        if self.is_rational() {
            Some(&self.a)
        } else {
            None
        }
    }

    pub fn scale(&self, r: &Rat) -> Self {
        QuadAmp {
            a: &self.a * r,
            b: &self.b * r,
            c: &self.c * r,
            d: &self.d * r,
        }
    }

    /// Exact sign of the real value: -1, 0 or +1.
    ///
    /// Works by two squaring descents: the value is `x + y*sqrt3` with
    /// `x, y` in Q[sqrt2], and `sign(x + y*sqrt3) = sign(x) * sign(x^2 - 3 y^2)`
    /// whenever `x` and `y` have opposite signs.
    pub fn signum(&self) -> i8 {
        fn sign_rat(r: &Rat) -> i8 {
            if r.is_zero() {
                0
            } else if r.is_positive() {
                1
            } else {
                -1
            }
        }
        // Sign of p + q*sqrt2.
        fn sign_q2(p: &Rat, q: &Rat) -> i8 {
            let (sp, sq) = (sign_rat(p), sign_rat(q));
            if sq == 0 {
                return sp;
            }
            if sp == 0 {
                return sq;
            }
            if sp == sq {
                return sp;
            }
            sp * sign_rat(&(p * p - rat(2, 1) * q * q))
        }
        let (x0, x1) = (&self.a, &self.b); // x = x0 + x1*sqrt2
        let (y0, y1) = (&self.c, &self.d); // y = y0 + y1*sqrt2
        let sx = sign_q2(x0, x1);
        let sy = sign_q2(y0, y1);
        if sy == 0 {
            return sx;
        }
        if sx == 0 {
            return sy;
        }
        if sx == sy {
            return sx;
        }
        // x^2 - 3 y^2 in Q[sqrt2].
        let p = x0 * x0 + rat(2, 1) * x1 * x1 - rat(3, 1) * (y0 * y0 + rat(2, 1) * y1 * y1);
        let q = rat(2, 1) * x0 * x1 - rat(6, 1) * y0 * y1;
        sx * sign_q2(&p, &q)
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            Amplitude::neg(self)
        } else {
            self.clone()
        }
    }
}

impl Add for &QuadAmp {
    type Output = QuadAmp;
    fn add(self, other: &QuadAmp) -> QuadAmp {
        QuadAmp {
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            c: &self.c + &other.c,
            d: &self.d + &other.d,
        }
    }
}

impl Sub for &QuadAmp {
    type Output = QuadAmp;
    fn sub(self, other: &QuadAmp) -> QuadAmp {
        QuadAmp {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            c: &self.c - &other.c,
            d: &self.d - &other.d,
        }
    }
}

impl Neg for &QuadAmp {
    type Output = QuadAmp;
    fn neg(self) -> QuadAmp {
        QuadAmp {
            a: -&self.a,
            b: -&self.b,
            c: -&self.c,
            d: -&self.d,
        }
    }
}

impl Mul for &QuadAmp {
    type Output = QuadAmp;
    fn mul(self, o: &QuadAmp) -> QuadAmp {
        // Multiplication table: sqrt2*sqrt3 = sqrt6, sqrt2*sqrt6 = 2*sqrt3,
        // sqrt3*sqrt6 = 3*sqrt2.
        let two = rat(2, 1);
        let three = rat(3, 1);
        let six = rat(6, 1);
        QuadAmp {
            a: &self.a * &o.a + &two * &self.b * &o.b + &three * &self.c * &o.c + &six * &self.d * &o.d,
            b: &self.a * &o.b + &self.b * &o.a + &three * (&self.c * &o.d + &self.d * &o.c),
            c: &self.a * &o.c + &self.c * &o.a + &two * (&self.b * &o.d + &self.d * &o.b),
            d: &self.a * &o.d + &self.d * &o.a + &self.b * &o.c + &self.c * &o.b,
        }
    }
}

impl PartialOrd for QuadAmp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self - other).signum() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        })
    }
}

/// Square root of a nonnegative rational, when rational.
fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let (num, den) = (r.numer(), r.denom());
    let sn = num.sqrt();
    let sd = den.sqrt();
    if &(&sn * &sn) == num && &(&sd * &sd) == den {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}

impl Amplitude for QuadAmp {
    fn zero() -> Self {
        Self::default()
    }

    fn one() -> Self {
        Self::rational(rat(1, 1))
    }

    fn sqrt1_2() -> Self {
        Self::inv_sqrt2()
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }

    fn sub(&self, other: &Self) -> Self {
        self - other
    }

    fn neg(&self) -> Self {
        -self
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn conj(&self) -> Self {
        self.clone()
    }

    fn abs_sq(&self) -> Self {
        self * self
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }

    fn from_quad(q: &QuadAmp) -> Self {
        q.clone()
    }

    fn from_polar(magnitude: &QuadAmp, phase: f64) -> Option<Self> {
        if phase == 0.0 {
            Some(magnitude.clone())
        } else {
            None
        }
    }

    fn axis_coefficients(theta: f64) -> Option<(Self, Self)> {
        if theta == 0.0 {
            Some((Self::one(), Self::zero()))
        } else if theta == core::f64::consts::FRAC_PI_4 {
            Some((Self::inv_sqrt2(), Self::inv_sqrt2()))
        } else if theta == core::f64::consts::FRAC_PI_2 {
            Some((Self::zero(), Self::one()))
        } else {
            None
        }
    }

    fn inv_sqrt_prob(&self) -> Option<Self> {
        let p = self.as_rational()?;
        if !p.is_positive() {
            return None;
        }
        // p = s^2      -> 1/sqrt(p) = 1/s
        // p = 2 s^2    -> 1/(s*sqrt2) = sqrt2 / (2 s)
        // p = 3 s^2    -> sqrt3 / (3 s)
        // p = 6 s^2    -> sqrt6 / (6 s)
        if let Some(s) = rat_sqrt(p) {
            return Some(Self::rational(s.recip()));
        }
        if let Some(s) = rat_sqrt(&(p / rat(2, 1))) {
            return Some(Self::sqrt2_times((s * rat(2, 1)).recip()));
        }
        if let Some(s) = rat_sqrt(&(p / rat(3, 1))) {
            return Some(Self::sqrt3_times((s * rat(3, 1)).recip()));
        }
        if let Some(s) = rat_sqrt(&(p / rat(6, 1))) {
            return Some(Self::sqrt6_times((s * rat(6, 1)).recip()));
        }
        None
    }

    fn prob_ratio(num: &Self, den: &Self) -> Option<Self> {
        let d = den.as_rational()?;
        if d.is_zero() {
            return None;
        }
        Some(num.scale(&d.recip()))
    }

    fn prob_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn prob_sign(&self) -> i8 {
        self.signum()
    }

    fn to_f64(&self) -> f64 {
        let f = |r: &Rat| r.to_f64().unwrap_or(f64::NAN);
        f(&self.a) + f(&self.b) * SQRT2 + f(&self.c) * SQRT3 + f(&self.d) * SQRT6
    }
}

fn fmt_rat(r: &Rat) -> String {
    use alloc::format;
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for QuadAmp {
    /// Canonical literal form: terms ordered `1, sqrt2, sqrt3, sqrt6`,
    /// zero terms omitted, e.g. `-1/2+1/3*sqrt6`.  Parsed back by
    /// [`QuadAmp::from_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if Amplitude::is_zero(self) {
            return f.write_str("0");
        }
        let mut first = true;
        let mut put = |f: &mut fmt::Formatter<'_>, r: &Rat, root: Option<&str>| -> fmt::Result {
            if r.is_zero() {
                return Ok(());
            }
            if !first && !r.is_negative() {
                f.write_str("+")?;
            }
            first = false;
            match root {
                None => f.write_str(&fmt_rat(r))?,
                Some(name) => {
                    if r.is_one() {
                        f.write_str(name)?;
                    } else if (-r).is_one() {
                        f.write_str("-")?;
                        f.write_str(name)?;
                    } else {
                        f.write_str(&fmt_rat(r))?;
                        f.write_str("*")?;
                        f.write_str(name)?;
                    }
                }
            }
            Ok(())
        };
        put(f, &self.a, None)?;
        put(f, &self.b, Some("sqrt2"))?;
        put(f, &self.c, Some("sqrt3"))?;
        put(f, &self.d, Some("sqrt6"))?;
        Ok(())
    }
}

/// Error from parsing an exact amplitude literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmpParseError {
    pub literal: String,
    pub reason: &'static str,
}

impl fmt::Display for AmpParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad amplitude literal `{}`: {}", self.literal, self.reason)
    }
}

impl FromStr for QuadAmp {
    type Err = AmpParseError;

    /// Parses sums of radical terms without spaces.  Accepted atoms:
    /// `p`, `p/q`, `[p[/q]*]sqrtN`, and the division shorthands `p/sqrtN`
    /// (N in {2, 3, 6}, plus `p/sqrt12`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &'static str| AmpParseError {
            literal: String::from(s),
            reason,
        };
        if s.is_empty() {
            return Err(err("empty"));
        }
        // Split into signed atoms.
        let bytes = s.as_bytes();
        let mut atoms: Vec<(i8, &str)> = Vec::new();
        let mut start = 0usize;
        let mut sign: i8 = 1;
        let mut i = 0usize;
        if bytes[0] == b'+' || bytes[0] == b'-' {
            sign = if bytes[0] == b'-' { -1 } else { 1 };
            start = 1;
            i = 1;
        }
        while i < bytes.len() {
            let ch = bytes[i];
            if ch == b'+' || ch == b'-' {
                if i == start {
                    return Err(err("consecutive signs"));
                }
                atoms.push((sign, &s[start..i]));
                sign = if ch == b'-' { -1 } else { 1 };
                start = i + 1;
            }
            i += 1;
        }
        if start >= bytes.len() {
            return Err(err("trailing sign"));
        }
        atoms.push((sign, &s[start..]));

        fn parse_plain_rat(t: &str) -> Option<Rat> {
            // `p` or `p/q` with integer p, q (no radicals).
            if t.contains("sqrt") {
                return None;
            }
            Rat::from_str(t).ok()
        }

        let mut total = QuadAmp::zero();
        for (sg, atom) in atoms {
            let mut val: QuadAmp;
            if let Some(r) = parse_plain_rat(atom) {
                val = QuadAmp::rational(r);
            } else if let Some(root) = atom.strip_prefix("sqrt") {
                val = match root {
                    "2" => QuadAmp::sqrt2_times(rat(1, 1)),
                    "3" => QuadAmp::sqrt3_times(rat(1, 1)),
                    "6" => QuadAmp::sqrt6_times(rat(1, 1)),
                    _ => return Err(err("unknown radical")),
                };
            } else if let Some((coef, root)) = atom.split_once("*sqrt") {
                let r = parse_plain_rat(coef).ok_or_else(|| err("bad coefficient"))?;
                val = match root {
                    "2" => QuadAmp::sqrt2_times(r),
                    "3" => QuadAmp::sqrt3_times(r),
                    "6" => QuadAmp::sqrt6_times(r),
                    _ => return Err(err("unknown radical")),
                };
            } else if let Some((num, root)) = atom.split_once("/sqrt") {
                let r = parse_plain_rat(num).ok_or_else(|| err("bad numerator"))?;
                val = match root {
                    "2" => QuadAmp::sqrt2_times(r / rat(2, 1)),
                    "3" => QuadAmp::sqrt3_times(r / rat(3, 1)),
                    "6" => QuadAmp::sqrt6_times(r / rat(6, 1)),
                    "12" => QuadAmp::sqrt3_times(r / rat(6, 1)),
                    _ => return Err(err("unknown radical")),
                };
            } else {
                return Err(err("unrecognized atom"));
            }
            if sg < 0 {
                val = Amplitude::neg(&val);
            }
            total = Amplitude::add(&total, &val);
        }
        Ok(total)
    }
}

/// Complex float amplitude, the oracle backend.
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct FloatAmp {
    pub re: f64,
    pub im: f64,
}

impl FloatAmp {
    pub fn new(re: f64, im: f64) -> Self {
        FloatAmp { re, im }
    }

    pub fn real(re: f64) -> Self {
        FloatAmp { re, im: 0.0 }
    }

    pub fn magnitude(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

impl fmt::Display for FloatAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0.0 {
            write!(f, "{}", self.re)
        } else if self.im < 0.0 {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl Amplitude for FloatAmp {
    fn zero() -> Self {
        Self::default()
    }

    fn one() -> Self {
        Self::real(1.0)
    }

    fn sqrt1_2() -> Self {
        Self::real(core::f64::consts::FRAC_1_SQRT_2)
    }

    fn add(&self, o: &Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    fn sub(&self, o: &Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    fn neg(&self) -> Self {
        Self::new(-self.re, -self.im)
    }

    fn mul(&self, o: &Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    fn conj(&self) -> Self {
        Self::new(self.re, -self.im)
    }

    fn abs_sq(&self) -> Self {
        Self::real(self.re * self.re + self.im * self.im)
    }

    fn is_zero(&self) -> bool {
        self.magnitude() < PRUNE_EPS
    }

    fn from_quad(q: &QuadAmp) -> Self {
        Self::real(q.to_f64())
    }

    fn from_polar(magnitude: &QuadAmp, phase: f64) -> Option<Self> {
        let m = magnitude.to_f64();
        Some(Self::new(m * libm::cos(phase), m * libm::sin(phase)))
    }

    fn axis_coefficients(theta: f64) -> Option<(Self, Self)> {
        Some((Self::real(libm::cos(theta)), Self::real(libm::sin(theta))))
    }

    fn inv_sqrt_prob(&self) -> Option<Self> {
        if self.re <= 0.0 {
            None
        } else {
            Some(Self::real(1.0 / libm::sqrt(self.re)))
        }
    }

    fn prob_ratio(num: &Self, den: &Self) -> Option<Self> {
        if den.re.abs() < PRUNE_EPS {
            None
        } else {
            Some(Self::real(num.re / den.re))
        }
    }

    fn prob_eq(&self, other: &Self) -> bool {
        (self.re - other.re).abs() <= PROB_EPS
    }

    fn prob_sign(&self) -> i8 {
        if self.re > PROB_EPS {
            1
        } else if self.re < -PROB_EPS {
            -1
        } else {
            0
        }
    }

    fn to_f64(&self) -> f64 {
        self.re
    }
}
