//! Laurent polynomials over F_q in the variable t, and square matrices over them.
//!
//! The valuation is v(f) = −deg(f), so 1/t is the uniformizer of the completion
//! O = F_q[[1/t]]. Polynomials are stored densely between their lowest and highest
//! nonzero exponents; the zero polynomial has no coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, BtqError, Result};
use crate::gf::{self, add_mod, check_prime, inv_mod, mul_mod, neg_mod, sub_mod, FqElem};

/// Depth of the 1/t-adic truncation used when sampling elements of GL_d(O).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OPrecision {
    pub depth: u32,
}

impl Default for OPrecision {
    fn default() -> Self {
        OPrecision { depth: 16 }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    q: u32,
    low: i64,
    coeffs: Vec<u32>,
}

impl LaurentPoly {
    pub fn zero(q: u32) -> Self {
        LaurentPoly { q, low: 0, coeffs: Vec::new() }
    }

    pub fn one(q: u32) -> Self {
        Self::monomial(1, 0, q)
    }

    pub fn constant(c: u32, q: u32) -> Self {
        Self::monomial(c, 0, q)
    }

    /// c · t^e.
    pub fn monomial(c: u32, e: i64, q: u32) -> Self {
        let c = c % q;
        if c == 0 {
            Self::zero(q)
        } else {
            LaurentPoly { q, low: e, coeffs: vec![c] }
        }
    }

    /// The variable t.
    pub fn t(q: u32) -> Self {
        Self::monomial(1, 1, q)
    }

    /// Builds a polynomial from (exponent, coefficient) pairs; repeated exponents add up.
    pub fn from_terms(q: u32, terms: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let terms: Vec<(i64, i64)> = terms.into_iter().collect();
        let Some(lo) = terms.iter().map(|t| t.0).min() else { return Self::zero(q) };
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![0u32; (hi - lo + 1) as usize];
        for (e, c) in terms {
            let c = c.rem_euclid(q as i64) as u32;
            let slot = &mut coeffs[(e - lo) as usize];
            *slot = add_mod(*slot, c, q);
        }
        LaurentPoly { q, low: lo, coeffs }.trimmed()
    }

    pub(crate) fn from_dense(q: u32, low: i64, coeffs: Vec<u32>) -> Self {
        LaurentPoly { q, low, coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        let lead_zeros = self.coeffs.iter().take_while(|&&c| c == 0).count();
        if lead_zeros == self.coeffs.len() {
            self.coeffs.clear();
            self.low = 0;
        } else if lead_zeros > 0 {
            self.coeffs.drain(..lead_zeros);
            self.low += lead_zeros as i64;
        }
        self
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.low + self.coeffs.len() as i64 - 1)
        }
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn low_exponent(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.low)
        }
    }

    /// v(f) = −deg f; `None` for the zero polynomial (v = +∞).
    pub fn valuation(&self) -> Option<i64> {
        self.degree().map(|d| -d)
    }

    pub fn coeff(&self, e: i64) -> u32 {
        if e < self.low {
            return 0;
        }
        self.coeffs.get((e - self.low) as usize).copied().unwrap_or(0)
    }

    pub fn coeff_elem(&self, e: i64) -> FqElem {
        FqElem::new_unchecked(self.coeff(e) as i64, self.q)
    }

    /// Coefficient of the top-degree term (0 for the zero polynomial).
    pub fn leading_coeff(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    /// Nonzero terms as (exponent, coefficient), ascending in exponent.
    pub fn terms(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(move |(i, &c)| (self.low + i as i64, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    pub fn is_monomial(&self) -> bool {
        self.num_terms() == 1
    }

    /// True if every exponent is nonnegative (an element of F_q[t]).
    pub fn is_polynomial(&self) -> bool {
        self.is_zero() || self.low >= 0
    }

    /// True if the element lies in O, i.e. every exponent is ≤ 0.
    pub fn is_in_o(&self) -> bool {
        self.degree().is_none_or(|d| d <= 0)
    }

    /// Multiplication by t^e.
    pub fn shift(&self, e: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LaurentPoly { q: self.q, low: self.low + e, coeffs: self.coeffs.clone() }
    }

    /// Multiplication by a scalar residue.
    pub fn scale(&self, c: u32) -> Self {
        let c = c % self.q;
        if c == 0 {
            return Self::zero(self.q);
        }
        LaurentPoly {
            q: self.q,
            low: self.low,
            coeffs: self.coeffs.iter().map(|&x| mul_mod(x, c, self.q)).collect(),
        }
    }

    /// Drops every term with exponent below `e`.
    pub fn truncate_below(&self, e: i64) -> Self {
        if self.is_zero() || e <= self.low {
            return self.clone();
        }
        let skip = (e - self.low) as usize;
        if skip >= self.coeffs.len() {
            return Self::zero(self.q);
        }
        Self::from_dense(self.q, e, self.coeffs[skip..].to_vec())
    }

    /// Division by a nonzero monomial c·t^e; anything else is rejected.
    pub fn div_monomial(&self, m: &LaurentPoly) -> Result<Self> {
        self.check_field(m)?;
        if !m.is_monomial() {
            return invalid("division is only defined by nonzero monomials");
        }
        let e = m.low;
        let c = m.coeffs[0];
        Ok(self.scale(inv_mod(c, self.q)).shift(-e))
    }

    /// Exact quotient self / b in F_q[t, 1/t], or `None` if b does not divide self.
    pub fn exact_div(&self, b: &LaurentPoly) -> Option<Self> {
        if b.is_zero() || self.q != b.q {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero(self.q));
        }
        let q = self.q;
        let bdeg = b.degree().unwrap();
        let lc_inv = inv_mod(b.leading_coeff(), q);
        let qlow = self.low - b.low;
        let mut rem = self.clone();
        let mut quot: Vec<(i64, i64)> = Vec::new();
        while !rem.is_zero() {
            let e = rem.degree().unwrap() - bdeg;
            if e < qlow {
                return None;
            }
            let c = mul_mod(rem.leading_coeff(), lc_inv, q);
            quot.push((e, c as i64));
            rem = &rem - &b.shift(e).scale(c);
        }
        Some(Self::from_terms(q, quot))
    }

    /// True iff f ∈ O is a unit: no positive exponent and a nonzero constant term.
    pub fn is_unit_in_o(&self) -> Result<bool> {
        if self.is_zero() {
            return invalid("is_unit_in_O is undefined on the zero polynomial");
        }
        Ok(self.degree() == Some(0))
    }

    fn check_field(&self, other: &Self) -> Result<()> {
        if self.q != other.q {
            return Err(BtqError::InvalidInput(format!(
                "modulus mismatch: {} vs {}",
                self.q, other.q
            )));
        }
        Ok(())
    }

    fn combine(&self, other: &Self, negate_other: bool) -> Self {
        assert_eq!(self.q, other.q, "mixing Laurent polynomials over different fields");
        let q = self.q;
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if negate_other { -other } else { other.clone() };
        }
        let lo = self.low.min(other.low);
        let hi = self.degree().unwrap().max(other.degree().unwrap());
        let mut coeffs = vec![0u32; (hi - lo + 1) as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[(self.low - lo) as usize + i] = c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            let slot = &mut coeffs[(other.low - lo) as usize + i];
            *slot = if negate_other { sub_mod(*slot, c, q) } else { add_mod(*slot, c, q) };
        }
        Self::from_dense(q, lo, coeffs)
    }

    fn product(&self, other: &Self) -> Self {
        assert_eq!(self.q, other.q, "mixing Laurent polynomials over different fields");
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.q);
        }
        let q = self.q as u64;
        let mut acc = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                acc[i + j] = (acc[i + j] + a as u64 * b as u64) % q;
            }
        }
        Self::from_dense(self.q, self.low + other.low, acc.into_iter().map(|x| x as u32).collect())
    }

    /// Parses the ASCII grammar `term (("+"|"-") term)*` with
    /// `term := coeff | coeff "*" "t^" int | "t^" int | "t"`. Whitespace is ignored.
    pub fn parse(s: &str, q: u32) -> Result<Self> {
        check_prime(q)?;
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(BtqError::Parse("empty polynomial literal".into()));
        }
        let mut pos = 0usize;
        let mut terms: Vec<(i64, i64)> = Vec::new();
        let mut sign = 1i64;
        if chars[0] == '-' || chars[0] == '+' {
            sign = if chars[0] == '-' { -1 } else { 1 };
            pos = 1;
        }
        loop {
            let (e, c) = parse_term(&chars, &mut pos, s)?;
            let c = (c % q as i64) * sign;
            terms.push((e, c));
            if pos == chars.len() {
                break;
            }
            sign = match chars[pos] {
                '+' => 1,
                '-' => -1,
                other => {
                    return Err(BtqError::Parse(format!("unexpected '{other}' in \"{s}\"")));
                }
            };
            pos += 1;
        }
        Ok(Self::from_terms(q, terms))
    }
}

fn parse_uint(chars: &[char], pos: &mut usize) -> Option<i64> {
    let start = *pos;
    let mut v: i64 = 0;
    while *pos < chars.len() && chars[*pos].is_ascii_digit() {
        v = v.checked_mul(10)?.checked_add(chars[*pos].to_digit(10)? as i64)?;
        *pos += 1;
    }
    if *pos == start {
        None
    } else {
        Some(v)
    }
}

fn parse_power(chars: &[char], pos: &mut usize, src: &str) -> Result<i64> {
    // Expects to sit on 't'.
    *pos += 1;
    if *pos < chars.len() && chars[*pos] == '^' {
        *pos += 1;
        let mut sign = 1;
        if *pos < chars.len() && (chars[*pos] == '-' || chars[*pos] == '+') {
            sign = if chars[*pos] == '-' { -1 } else { 1 };
            *pos += 1;
        }
        let e = parse_uint(chars, pos)
            .ok_or_else(|| BtqError::Parse(format!("missing exponent in \"{src}\"")))?;
        Ok(sign * e)
    } else {
        Ok(1)
    }
}

fn parse_term(chars: &[char], pos: &mut usize, src: &str) -> Result<(i64, i64)> {
    if *pos < chars.len() && chars[*pos] == 't' {
        let e = parse_power(chars, pos, src)?;
        return Ok((e, 1));
    }
    let c = parse_uint(chars, pos)
        .ok_or_else(|| BtqError::Parse(format!("expected a term at offset {} in \"{src}\"", *pos)))?;
    if *pos < chars.len() && chars[*pos] == '*' {
        *pos += 1;
        if *pos >= chars.len() || chars[*pos] != 't' {
            return Err(BtqError::Parse(format!("expected 't' after '*' in \"{src}\"")));
        }
        let e = parse_power(chars, pos, src)?;
        return Ok((e, c));
    }
    Ok((0, c))
}

impl fmt::Display for LaurentPoly {
    /// Canonical form: terms by descending exponent, coefficients as residues in [0, q).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        let terms: Vec<(i64, u32)> = self.terms().collect();
        for &(e, c) in terms.iter().rev() {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (e, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "t")?,
                (e, 1) => write!(f, "t^{e}")?,
                (e, c) => write!(f, "{c}*t^{e}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self, self.q)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.combine(rhs, false)
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.combine(rhs, true)
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.product(rhs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            q: self.q,
            low: self.low,
            coeffs: self.coeffs.iter().map(|&c| neg_mod(c, self.q)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

/// A square matrix of Laurent polynomials, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentMatrix {
    q: u32,
    d: usize,
    entries: Vec<LaurentPoly>,
}

/// JSON matrix literal: `{"q": int, "d": int, "entries": [[string, ...], ...]}`,
/// optionally carrying the `profile` of a normalized building vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub q: u32,
    pub d: usize,
    pub entries: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<i64>>,
}

impl LaurentMatrix {
    pub fn new(q: u32, rows: Vec<Vec<LaurentPoly>>) -> Result<Self> {
        check_prime(q)?;
        let d = rows.len();
        if d == 0 {
            return invalid("matrix must be nonempty");
        }
        let mut entries = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return invalid("matrix must be square");
            }
            for e in row {
                if e.q != q {
                    return invalid("entry modulus does not match matrix modulus");
                }
                entries.push(e);
            }
        }
        Ok(LaurentMatrix { q, d, entries })
    }

    pub fn from_fn(q: u32, d: usize, mut f: impl FnMut(usize, usize) -> LaurentPoly) -> Self {
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(f(i, j));
            }
        }
        LaurentMatrix { q, d, entries }
    }

    pub fn zero(d: usize, q: u32) -> Self {
        Self::from_fn(q, d, |_, _| LaurentPoly::zero(q))
    }

    pub fn identity(d: usize, q: u32) -> Self {
        Self::from_fn(q, d, |i, j| if i == j { LaurentPoly::one(q) } else { LaurentPoly::zero(q) })
    }

    /// diag(t^{e_1}, …, t^{e_d}).
    pub fn diag_t(exps: &[i64], q: u32) -> Self {
        let d = exps.len();
        Self::from_fn(q, d, |i, j| {
            if i == j {
                LaurentPoly::monomial(1, exps[i], q)
            } else {
                LaurentPoly::zero(q)
            }
        })
    }

    /// Matrix with constant entries (residues mod q), rows given.
    pub fn from_constants(q: u32, rows: &[Vec<u32>]) -> Self {
        let d = rows.len();
        Self::from_fn(q, d, |i, j| LaurentPoly::constant(rows[i][j], q))
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: LaurentPoly) {
        assert_eq!(v.q, self.q);
        self.entries[i * self.d + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<LaurentPoly>> {
        (0..self.d).map(|i| self.entries[i * self.d..(i + 1) * self.d].to_vec()).collect()
    }

    pub fn entries(&self) -> &[LaurentPoly] {
        &self.entries
    }

    /// Largest exponent over all entries (`None` for the zero matrix).
    pub fn max_degree(&self) -> Option<i64> {
        self.entries.iter().filter_map(|e| e.degree()).max()
    }

    /// Smallest exponent over all entries (`None` for the zero matrix).
    pub fn min_exponent(&self) -> Option<i64> {
        self.entries.iter().filter_map(|e| e.low_exponent()).min()
    }

    pub fn is_polynomial(&self) -> bool {
        self.entries.iter().all(|e| e.is_polynomial())
    }

    /// Multiplication of every entry by t^e.
    pub fn shift(&self, e: i64) -> Self {
        LaurentMatrix { q: self.q, d: self.d, entries: self.entries.iter().map(|x| x.shift(e)).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.q, self.d, |i, j| self.get(j, i).clone())
    }

    pub fn checked_mul(&self, other: &LaurentMatrix) -> Result<LaurentMatrix> {
        if self.q != other.q || self.d != other.d {
            return invalid("matrix dimension or modulus mismatch");
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &LaurentMatrix) -> LaurentMatrix {
        let d = self.d;
        Self::from_fn(self.q, d, |i, j| {
            let mut acc = LaurentPoly::zero(self.q);
            for k in 0..d {
                let a = self.get(i, k);
                let b = other.get(k, j);
                if !a.is_zero() && !b.is_zero() {
                    acc = &acc + &(a * b);
                }
            }
            acc
        })
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> LaurentPoly {
        let d = self.d;
        let q = self.q;
        let mut m: Vec<Vec<LaurentPoly>> = self.rows();
        let mut prev = LaurentPoly::one(q);
        let mut negate = false;
        for k in 0..d {
            if m[k][k].is_zero() {
                match (k + 1..d).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        negate = !negate;
                    }
                    None => return LaurentPoly::zero(q),
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    let num = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                    m[i][j] = num.exact_div(&prev).expect("fraction-free elimination divides exactly");
                }
            }
            prev = m[k][k].clone();
        }
        if negate {
            -&m[d - 1][d - 1]
        } else {
            m[d - 1][d - 1].clone()
        }
    }

    /// Adjugate matrix: adj(M)·M = M·adj(M) = det(M)·I.
    pub fn adjugate(&self) -> LaurentMatrix {
        let d = self.d;
        let q = self.q;
        if d == 1 {
            return LaurentMatrix::identity(1, q);
        }
        Self::from_fn(q, d, |i, j| {
            // (i, j) entry is the (j, i) cofactor.
            let minor = Self::from_fn(q, d - 1, |r, c| {
                let rr = if r < j { r } else { r + 1 };
                let cc = if c < i { c } else { c + 1 };
                self.get(rr, cc).clone()
            });
            let m = minor.det();
            if (i + j) % 2 == 1 {
                -&m
            } else {
                m
            }
        })
    }

    /// True iff the determinant is a nonzero constant, i.e. the matrix lies in GL_d(F_q[t])
    /// (entries are also required to be polynomials).
    pub fn is_in_gl_fq_t(&self) -> bool {
        self.is_polynomial() && {
            let det = self.det();
            det.degree() == Some(0) && det.low_exponent() == Some(0)
        }
    }

    /// True iff every entry lies in O and the determinant is a unit of O.
    pub fn is_in_gl_o(&self) -> bool {
        self.entries.iter().all(|e| e.is_in_o()) && self.det().degree() == Some(0)
    }

    /// Residues of the constant terms, row by row.
    pub(crate) fn constant_terms(&self) -> Vec<Vec<u32>> {
        (0..self.d).map(|i| (0..self.d).map(|j| self.get(i, j).coeff(0)).collect()).collect()
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        MatrixLiteral {
            q: self.q,
            d: self.d,
            entries: (0..self.d)
                .map(|i| (0..self.d).map(|j| self.get(i, j).to_string()).collect())
                .collect(),
            profile: None,
        }
    }

    pub fn from_literal(lit: &MatrixLiteral) -> Result<Self> {
        check_prime(lit.q)?;
        if lit.d == 0 || lit.entries.len() != lit.d || lit.entries.iter().any(|r| r.len() != lit.d) {
            return invalid(format!("matrix literal must be {0}x{0}", lit.d));
        }
        let rows = lit
            .entries
            .iter()
            .map(|r| r.iter().map(|s| LaurentPoly::parse(s, lit.q)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(lit.q, rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_literal()).expect("literal serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let lit: MatrixLiteral =
            serde_json::from_str(s).map_err(|e| BtqError::Parse(format!("matrix literal: {e}")))?;
        Self::from_literal(&lit)
    }
}

impl Mul for &LaurentMatrix {
    type Output = LaurentMatrix;
    /// Panics on dimension or modulus mismatch; see [`LaurentMatrix::checked_mul`].
    fn mul(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        self.checked_mul(rhs).expect("matrix multiplication mismatch")
    }
}

impl fmt::Display for LaurentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.d {
            let row: Vec<String> = (0..self.d).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentMatrix(q={}, {})", self.q, self.to_json())
    }
}

fn random_poly(rng: &mut ChaCha8Rng, q: u32, lo: i64, hi: i64) -> LaurentPoly {
    let coeffs: Vec<u32> = (lo..=hi).map(|_| rng.gen_range(0..q)).collect();
    LaurentPoly::from_dense(q, lo, coeffs)
}

fn random_invertible_constant(rng: &mut ChaCha8Rng, d: usize, q: u32) -> Vec<Vec<u32>> {
    loop {
        let rows: Vec<Vec<u32>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(0..q)).collect()).collect();
        if gf::rank_mod(&rows, q) == d {
            return rows;
        }
    }
}

/// Random element of GL_d(F_q[t]) with every entry of degree ≤ `deg_bound`.
///
/// Starts from a random invertible constant matrix and applies random elementary
/// row operations row_i += p·row_j, keeping only those that respect the degree bound.
/// The determinant therefore stays in F_q^×. Deterministic in `seed`.
pub fn random_gamma(d: usize, q: u32, deg_bound: u32, seed: u64) -> Result<LaurentMatrix> {
    check_prime(q)?;
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<LaurentPoly>> = random_invertible_constant(&mut rng, d, q)
        .into_iter()
        .map(|r| r.into_iter().map(|c| LaurentPoly::constant(c, q)).collect())
        .collect();
    if d == 1 || deg_bound == 0 {
        return LaurentMatrix::new(q, rows);
    }
    let steps = 4 * d * d;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < steps && attempts < 50 * steps {
        attempts += 1;
        let i = rng.gen_range(0..d);
        let mut j = rng.gen_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        let pdeg = rng.gen_range(0..=deg_bound as i64);
        let p = random_poly(&mut rng, q, 0, pdeg);
        let candidate: Vec<LaurentPoly> = (0..d).map(|c| &rows[i][c] + &(&p * &rows[j][c])).collect();
        if candidate.iter().all(|e| e.degree().is_none_or(|g| g <= deg_bound as i64)) {
            rows[i] = candidate;
            accepted += 1;
        }
    }
    LaurentMatrix::new(q, rows)
}

/// Random element of GL_d(O) whose entries are polynomials in 1/t with exponents in
/// [−precision, 0]. Rejection-samples until the constant-term matrix is invertible,
/// which is exactly the condition that the determinant is a unit of O.
pub fn random_k(d: usize, q: u32, precision: OPrecision, seed: u64) -> Result<LaurentMatrix> {
    check_prime(q)?;
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = precision.depth as i64;
    loop {
        let m = LaurentMatrix::from_fn(q, d, |_, _| random_poly(&mut rng, q, -p, 0));
        if gf::rank_mod(&m.constant_terms(), q) == d {
            return Ok(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, q: u32) -> LaurentPoly {
        LaurentPoly::parse(s, q).unwrap()
    }

    #[test]
    fn monomial_shift_and_char_two() {
        let a = p("t^2+1", 2);
        let b = p("t^-1", 2);
        assert_eq!(&a * &b, p("t+t^-1", 2));
        let c = p("t+1", 2);
        assert_eq!(&c * &c, p("t^2+1", 2));
        assert_eq!(p("t^3+t", 5).valuation(), Some(-3));
    }

    #[test]
    fn unit_test_in_o() {
        assert!(p("1+t^-1", 3).is_unit_in_o().unwrap());
        assert!(!p("t", 3).is_unit_in_o().unwrap());
        assert!(!p("t^-2", 3).is_unit_in_o().unwrap());
        assert!(LaurentPoly::zero(3).is_unit_in_o().is_err());
    }

    #[test]
    fn division_by_monomial_only() {
        let a = p("t^2+1", 3);
        assert_eq!(a.div_monomial(&p("2*t^1", 3)).unwrap(), p("2*t^1+2*t^-1", 3));
        assert!(a.div_monomial(&p("t+1", 3)).is_err());
        assert!(a.div_monomial(&LaurentPoly::zero(3)).is_err());
    }

    #[test]
    fn exact_division() {
        let a = p("t+1", 3);
        let b = p("t^2+2*t^1+1+t^-1", 3);
        let prod = &a * &b;
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert!(p("t^2+1", 3).exact_div(&p("t+1", 3)).is_none());
    }

    #[test]
    fn parse_round_trip() {
        for (s, q) in [("t^2+1", 2), ("t+1+2*t^-3", 3), ("0", 5), ("t^-1", 7), ("4*t^1+3", 5)] {
            let f = p(s, q);
            assert_eq!(f.to_string(), s);
            assert_eq!(p(&f.to_string(), q), f);
        }
        assert_eq!(p("t - 1", 3), p("t+2", 3));
        assert_eq!(p("-t", 3), p("2*t^1", 3));
        assert!(LaurentPoly::parse("t^", 3).is_err());
        assert!(LaurentPoly::parse("3*x", 3).is_err());
        assert!(LaurentPoly::parse("", 3).is_err());
        assert!(LaurentPoly::parse("t", 4).is_err());
    }

    #[test]
    fn determinants() {
        let q = 2;
        assert_eq!(LaurentMatrix::diag_t(&[2, 1, 0], q).det(), p("t^3", q));
        assert_eq!(LaurentMatrix::identity(3, q).det(), LaurentPoly::one(q));
        let m = LaurentMatrix::new(
            q,
            vec![
                vec![p("t^3", q), p("0", q), p("0", q)],
                vec![p("t^2", q), p("t", q), p("0", q)],
                vec![p("t", q), p("0", q), p("1", q)],
            ],
        )
        .unwrap();
        assert_eq!(m.det(), p("t^4", q));
    }

    #[test]
    fn adjugate_identity() {
        let m = random_gamma(3, 3, 2, 7).unwrap().checked_mul(&LaurentMatrix::diag_t(&[3, 1, 0], 3)).unwrap();
        let prod = &m.adjugate() * &m;
        let det = m.det();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { det.clone() } else { LaurentPoly::zero(3) };
                assert_eq!(prod.get(i, j), &want);
            }
        }
    }

    #[test]
    fn samplers_meet_contracts() {
        for seed in 0..20 {
            let g = random_gamma(3, 2, 3, seed).unwrap();
            assert!(g.is_in_gl_fq_t());
            assert!(g.max_degree().unwrap() <= 3);
            let g0 = random_gamma(3, 3, 0, seed).unwrap();
            assert_eq!(g0.max_degree(), Some(0));
            assert!(g0.is_in_gl_fq_t());
            let k = random_k(3, 2, OPrecision::default(), seed).unwrap();
            assert!(k.det().is_unit_in_o().unwrap());
        }
        assert_eq!(random_gamma(3, 2, 3, 11).unwrap(), random_gamma(3, 2, 3, 11).unwrap());
    }

    #[test]
    fn matrix_literal_round_trip() {
        let m = random_gamma(3, 5, 2, 3).unwrap();
        let json = m.to_json();
        assert_eq!(LaurentMatrix::from_json(&json).unwrap(), m);
        assert!(LaurentMatrix::from_json(r#"{"q":2,"d":2,"entries":[["1"]]}"#).is_err());
    }
}
