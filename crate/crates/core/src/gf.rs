//! Arithmetic in the prime field F_q and q-analogue counting functions.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{invalid, BtqError, Result};

/// Trial-division primality test; moduli here are tiny.
pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut p = 2u32;
    while (p as u64) * (p as u64) <= q as u64 {
        if q.is_multiple_of(p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Rejects moduli that are not prime.
pub fn check_prime(q: u32) -> Result<()> {
    if is_prime(q) {
        Ok(())
    } else {
        invalid(format!("q = {q} is not prime"))
    }
}

#[inline]
pub(crate) fn add_mod(a: u32, b: u32, q: u32) -> u32 {
    ((a as u64 + b as u64) % q as u64) as u32
}

#[inline]
pub(crate) fn sub_mod(a: u32, b: u32, q: u32) -> u32 {
    ((a as u64 + q as u64 - b as u64) % q as u64) as u32
}

#[inline]
pub(crate) fn mul_mod(a: u32, b: u32, q: u32) -> u32 {
    ((a as u64 * b as u64) % q as u64) as u32
}

#[inline]
pub(crate) fn neg_mod(a: u32, q: u32) -> u32 {
    if a == 0 {
        0
    } else {
        q - a
    }
}

pub(crate) fn pow_mod(mut base: u32, mut exp: u64, q: u32) -> u32 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Inverse of a nonzero residue (Fermat). Callers guarantee `a != 0`.
#[inline]
pub(crate) fn inv_mod(a: u32, q: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(q));
    pow_mod(a, q as u64 - 2, q)
}

/// An element of the prime field F_q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqElem {
    value: u32,
    modulus: u32,
}

impl FqElem {
    /// Reduces `value` modulo the prime `q`.
    pub fn new(value: i64, q: u32) -> Result<Self> {
        check_prime(q)?;
        Ok(Self::new_unchecked(value, q))
    }

    pub(crate) fn new_unchecked(value: i64, q: u32) -> Self {
        let v = value.rem_euclid(q as i64) as u32;
        FqElem { value: v, modulus: q }
    }

    pub fn zero(q: u32) -> Self {
        FqElem { value: 0, modulus: q }
    }

    pub fn one(q: u32) -> Self {
        FqElem { value: 1 % q, modulus: q }
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(&self) -> Result<Self> {
        if self.value == 0 {
            return Err(BtqError::InvalidInput("zero has no inverse in F_q".into()));
        }
        Ok(FqElem {
            value: inv_mod(self.value, self.modulus),
            modulus: self.modulus,
        })
    }

    pub fn pow(&self, exp: u64) -> Self {
        FqElem {
            value: pow_mod(self.value, exp, self.modulus),
            modulus: self.modulus,
        }
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(self.modulus, other.modulus, "mixing elements of different prime fields");
    }
}

impl fmt::Display for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FqElem {
    type Output = FqElem;
    fn add(self, rhs: FqElem) -> FqElem {
        self.same_field(&rhs);
        FqElem { value: add_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl Sub for FqElem {
    type Output = FqElem;
    fn sub(self, rhs: FqElem) -> FqElem {
        self.same_field(&rhs);
        FqElem { value: sub_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl Mul for FqElem {
    type Output = FqElem;
    fn mul(self, rhs: FqElem) -> FqElem {
        self.same_field(&rhs);
        FqElem { value: mul_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl Neg for FqElem {
    type Output = FqElem;
    fn neg(self) -> FqElem {
        FqElem { value: neg_mod(self.value, self.modulus), modulus: self.modulus }
    }
}

fn q_pow(q: u32, e: usize) -> BigUint {
    BigUint::from(q).pow(e as u32)
}

/// |GL_m(F_q)| = ∏_{i=0}^{m-1} (q^m − q^i).
pub fn gl_order(m: usize, q: u32) -> Result<BigUint> {
    if m == 0 {
        return invalid("gl_order needs m >= 1");
    }
    check_prime(q)?;
    let qm = q_pow(q, m);
    let mut acc = BigUint::one();
    for i in 0..m {
        acc *= &qm - q_pow(q, i);
    }
    Ok(acc)
}

/// |PGL_d(F_q)| = |GL_d(F_q)| / (q − 1).
pub fn pgl_order(d: usize, q: u32) -> Result<BigUint> {
    if d < 2 {
        return invalid("pgl_order needs d >= 2");
    }
    Ok(gl_order(d, q)? / BigUint::from(q - 1))
}

/// Gaussian binomial coefficient [d choose k]_q: the number of k-dimensional
/// (equivalently, codimension-k) subspaces of F_q^d.
pub fn gaussian_binomial(d: usize, k: i64, q: u32) -> Result<BigUint> {
    if k < 0 || k as usize > d {
        return invalid(format!("gaussian_binomial needs 0 <= k <= d, got k = {k}, d = {d}"));
    }
    check_prime(q)?;
    let k = k as usize;
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= q_pow(q, d - i) - 1u32;
        den *= q_pow(q, i + 1) - 1u32;
    }
    debug_assert!((&num % &den).is_zero());
    Ok(num / den)
}

/// All elements of F_q^n in lexicographic order (digits little-endian in position 0..n).
pub(crate) fn all_vectors(n: usize, q: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity((q as usize).pow(n as u32));
    let mut cur = vec![0u32; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < q {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Rank of a matrix over F_q (rows of residues), by Gaussian elimination.
pub(crate) fn rank_mod(rows: &[Vec<u32>], q: u32) -> usize {
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, p);
        let inv = inv_mod(m[rank][col], q);
        for x in m[rank].iter_mut() {
            *x = mul_mod(*x, inv, q);
        }
        let pivot = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, &p) in row.iter_mut().zip(&pivot) {
                    *x = sub_mod(*x, mul_mod(f, p, q), q);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// A nonzero vector `a` with Σ a_i · rows[i] = 0, if the rows are dependent.
pub(crate) fn left_kernel_vector(rows: &[Vec<u32>], q: u32) -> Option<Vec<u32>> {
    let n = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    // Augment each row with an identity block tracking the combination.
    let mut m: Vec<Vec<u32>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..n).map(|j| u32::from(i == j)));
            v
        })
        .collect();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..n).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, p);
        let inv = inv_mod(m[rank][col], q);
        for x in m[rank].iter_mut() {
            *x = mul_mod(*x, inv, q);
        }
        let pivot = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, &p) in row.iter_mut().zip(&pivot) {
                    *x = sub_mod(*x, mul_mod(f, p, q), q);
                }
            }
        }
        rank += 1;
    }
    if rank == n {
        None
    } else {
        Some(m[rank][ncols..].to_vec())
    }
}
