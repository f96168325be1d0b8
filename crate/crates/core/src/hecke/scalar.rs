//! Scalar backends for functions on the quotient: exact rationals, an exact quadratic
//! extension Q(√Δ), and complex doubles.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{BtqError, Result};

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn from_int(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }
    /// Whether equality on this backend is exact.
    fn is_exact() -> bool;
    /// |x| as a double, for reporting.
    fn magnitude(&self) -> f64;
    /// Complex conjugate (the identity on real backends).
    fn conj(&self) -> Self;
    /// |x|² = x·conj(x).
    fn abs_sq(&self) -> Self {
        self.clone() * self.conj()
    }
    /// A square root inside the backend, if one exists there.
    fn sqrt(&self) -> Option<Self>;
    fn to_complex(&self) -> Complex64;
    /// Deterministic text rendering (exact for exact backends).
    fn to_text(&self) -> String;
    fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
    /// Exact equality for exact backends; |x − y| ≤ tol·max(1, |x|) for floating ones.
    fn agrees(&self, other: &Self, tol: f64) -> bool {
        if Self::is_exact() {
            self == other
        } else {
            (self.clone() - other.clone()).magnitude() <= tol * self.magnitude().max(1.0)
        }
    }
}

/// The rational square root of x, if x is the square of a rational.
pub fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| BigRational::new(n, d))
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn is_exact() -> bool {
        true
    }
    fn magnitude(&self) -> f64 {
        rat_to_f64(&self.abs())
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_to_f64(self), 0.0)
    }
    fn to_text(&self) -> String {
        self.to_string()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(rat_to_f64(r), 0.0)
    }
    fn is_exact() -> bool {
        false
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn sqrt(&self) -> Option<Self> {
        Some(Complex64::sqrt(*self))
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
    fn to_text(&self) -> String {
        format_complex(*self)
    }
}

/// a + b·√Δ with a, b, Δ rational. Elements with b = 0 may leave Δ unspecified; combining
/// two elements with different specified Δ is a logic error and panics.
#[derive(Clone, Debug)]
pub struct QuadExt {
    pub a: BigRational,
    pub b: BigRational,
    pub delta: Option<BigRational>,
}

impl QuadExt {
    pub fn rational(a: BigRational) -> Self {
        QuadExt { a, b: Zero::zero(), delta: None }
    }

    pub fn new(a: BigRational, b: BigRational, delta: BigRational) -> Self {
        QuadExt { a, b, delta: Some(delta) }
    }

    /// √Δ itself.
    pub fn sqrt_of(delta: BigRational) -> Self {
        QuadExt { a: Zero::zero(), b: One::one(), delta: Some(delta) }
    }

    /// The Galois conjugate a − b√Δ.
    pub fn galois_conj(&self) -> Self {
        QuadExt { a: self.a.clone(), b: -self.b.clone(), delta: self.delta.clone() }
    }

    /// Field norm a² − b²Δ.
    pub fn norm(&self) -> BigRational {
        match &self.delta {
            Some(dl) if !self.b.is_zero() => &self.a * &self.a - &self.b * &self.b * dl,
            _ => &self.a * &self.a,
        }
    }

    fn merged_delta(&self, other: &Self) -> Option<BigRational> {
        match (&self.delta, &other.delta) {
            (Some(x), Some(y)) => {
                assert_eq!(x, y, "mixing different quadratic extensions");
                Some(x.clone())
            }
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (None, None) => None,
        }
    }

    /// Checked division; fails when the divisor has zero norm.
    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        let n = other.norm();
        if n.is_zero() {
            return Err(BtqError::InvalidInput("division by a zero-norm quadratic element".into()));
        }
        let num = self.clone() * other.galois_conj();
        Ok(QuadExt { a: num.a / &n, b: num.b / &n, delta: num.delta })
    }
}

impl PartialEq for QuadExt {
    fn eq(&self, other: &Self) -> bool {
        if self.a != other.a || self.b != other.b {
            return false;
        }
        self.b.is_zero() || self.delta == other.delta
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.delta {
            Some(dl) if !self.b.is_zero() => write!(f, "{} + {}*sqrt({})", self.a, self.b, dl),
            _ => write!(f, "{}", self.a),
        }
    }
}

impl Add for QuadExt {
    type Output = QuadExt;
    fn add(self, rhs: QuadExt) -> QuadExt {
        let delta = self.merged_delta(&rhs);
        QuadExt { a: self.a + rhs.a, b: self.b + rhs.b, delta }
    }
}

impl Sub for QuadExt {
    type Output = QuadExt;
    fn sub(self, rhs: QuadExt) -> QuadExt {
        let delta = self.merged_delta(&rhs);
        QuadExt { a: self.a - rhs.a, b: self.b - rhs.b, delta }
    }
}

impl Mul for QuadExt {
    type Output = QuadExt;
    fn mul(self, rhs: QuadExt) -> QuadExt {
        let delta = self.merged_delta(&rhs);
        let bb = &self.b * &rhs.b;
        let cross = match &delta {
            Some(dl) if !bb.is_zero() => bb * dl,
            _ => Zero::zero(),
        };
        QuadExt {
            a: &self.a * &rhs.a + cross,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
            delta,
        }
    }
}

impl Div for QuadExt {
    type Output = QuadExt;
    /// Panics on a zero-norm divisor; see [`QuadExt::checked_div`].
    fn div(self, rhs: QuadExt) -> QuadExt {
        self.checked_div(&rhs).expect("quadratic division")
    }
}

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { a: -self.a, b: -self.b, delta: self.delta }
    }
}

impl Scalar for QuadExt {
    fn zero() -> Self {
        QuadExt::rational(Zero::zero())
    }
    fn one() -> Self {
        QuadExt::rational(One::one())
    }
    fn from_rational(r: &BigRational) -> Self {
        QuadExt::rational(r.clone())
    }
    fn is_exact() -> bool {
        true
    }
    fn magnitude(&self) -> f64 {
        self.to_complex().norm()
    }
    fn conj(&self) -> Self {
        match &self.delta {
            Some(dl) if dl.is_negative() => self.galois_conj(),
            _ => self.clone(),
        }
    }
    /// Square roots of rationals: exact when the rational is a square, otherwise the
    /// adjoined √a. Elements with an irrational part have no square root here.
    fn sqrt(&self) -> Option<Self> {
        if !self.b.is_zero() {
            return None;
        }
        match rational_sqrt(&self.a) {
            Some(s) => Some(QuadExt::rational(s)),
            None => Some(QuadExt::sqrt_of(self.a.clone())),
        }
    }
    fn to_complex(&self) -> Complex64 {
        let a = rat_to_f64(&self.a);
        let b = rat_to_f64(&self.b);
        match &self.delta {
            Some(dl) if !self.b.is_zero() => {
                let df = rat_to_f64(dl);
                if df < 0.0 {
                    Complex64::new(a, b * (-df).sqrt())
                } else {
                    Complex64::new(a + b * df.sqrt(), 0.0)
                }
            }
            _ => Complex64::new(a, 0.0),
        }
    }
    fn to_text(&self) -> String {
        self.to_string()
    }
}

/// Parses an exact rational `p`, `p/q` or decimal `1.25`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Ok(r) = s.parse::<BigRational>() {
        return Ok(r);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if let Some((ip, fp)) = body.split_once('.') {
        let ok = |p: &str| p.chars().all(|c| c.is_ascii_digit());
        if ok(ip) && ok(fp) && !(ip.is_empty() && fp.is_empty()) {
            let digits = format!("{ip}{fp}");
            let num: BigInt = digits.parse().unwrap_or_default();
            let den = BigInt::from(10u32).pow(fp.len() as u32);
            let r = BigRational::new(num, den);
            return Ok(if neg { -r } else { r });
        }
    }
    Err(BtqError::Parse(format!("bad rational \"{s}\"")))
}

/// Parses a complex literal `a+bi`, `a-bi`, `bi`, or a real `a` (decimal components).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || BtqError::Parse(format!("bad complex literal \"{s}\""));
    let num = |p: &str| -> Result<f64> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => p.parse::<f64>().map_err(|_| bad()),
        }
    };
    if let Some(body) = t.strip_suffix('i') {
        // Split at the last sign that is not the leading one and not part of an exponent.
        let bytes: Vec<char> = body.chars().collect();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == '+' || bytes[k] == '-') && !matches!(bytes[k - 1], 'e' | 'E'));
        match split {
            Some(k) => {
                let re: String = bytes[..k].iter().collect();
                let im: String = bytes[k..].iter().collect();
                Ok(Complex64::new(re.parse::<f64>().map_err(|_| bad())?, num(&im)?))
            }
            None => Ok(Complex64::new(0.0, num(body)?)),
        }
    } else {
        Ok(Complex64::new(t.parse::<f64>().map_err(|_| bad())?, 0.0))
    }
}

/// Formats a complex value as `a+bi` with fixed precision.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{:.12}{}{:.12}i", z.re, sign, z.im.abs())
}
