//! Covolume of Γ: the total weight Σ_{n̄ ∈ T} 1/|Γ_n̄|, as an exact closed form over ordered
//! compositions of d, as truncated partial sums, and with an explicit geometric tail bound.
//!
//! For a composition (d_1, …, d_r) the labels with that block structure are parametrized by
//! gaps g_l ≥ 1 between consecutive block values, and 1/|Γ_n̄| = c · ∏_l x_l^{g_l} with
//! x_l = q^{−s_l}, s_l = (d_1+⋯+d_l)(d_{l+1}+⋯+d_r) and
//! c = (q−1) / (∏_i |GL_{d_i}(F_q)| · q^{Σ_{i<j} d_i d_j}).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::domain::{enumerate_t, stabilizer_order};
use crate::error::{invalid, Result};
use crate::gf::{check_prime, gl_order};

/// Weight convention: `Pgl` divides stabilizer counts by the scalars F_q^× (the library
/// default); `Gl` counts them in GL_d, which divides every weight, and hence the covolume,
/// by q − 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    #[default]
    Pgl,
    Gl,
}

impl std::str::FromStr for Normalization {
    type Err = crate::BtqError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgl" => Ok(Normalization::Pgl),
            "gl" => Ok(Normalization::Gl),
            _ => invalid(format!("normalization must be pgl or gl, not \"{s}\"")),
        }
    }
}

fn normalize(x: BigRational, q: u32, norm: Normalization) -> BigRational {
    match norm {
        Normalization::Pgl => x,
        Normalization::Gl => x / BigRational::from_integer(BigInt::from(q - 1)),
    }
}

/// All ordered compositions of d (2^{d−1} of them), in lexicographic order.
pub fn compositions(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=d {
        for mut rest in compositions(d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn qpow_inv(q: u32, e: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(BigUint::from(q).pow(e as u32)))
}

/// (c, [x_1, …, x_{r−1}]) for one composition, PGL convention.
fn composition_data(comp: &[usize], q: u32) -> Result<(BigRational, Vec<BigRational>)> {
    let mut gl = BigUint::one();
    for &di in comp {
        gl *= gl_order(di, q)?;
    }
    let mut cross = 0usize;
    for i in 0..comp.len() {
        for j in i + 1..comp.len() {
            cross += comp[i] * comp[j];
        }
    }
    let c = BigRational::new(BigInt::from(q - 1), BigInt::from(gl)) * qpow_inv(q, cross);
    let total: usize = comp.iter().sum();
    let mut prefix = 0;
    let xs = comp[..comp.len() - 1]
        .iter()
        .map(|&di| {
            prefix += di;
            qpow_inv(q, prefix * (total - prefix))
        })
        .collect();
    Ok((c, xs))
}

fn geometric(x: &BigRational) -> BigRational {
    x / (BigRational::one() - x)
}

/// Per-composition contributions to the closed form (PGL convention).
pub fn covolume_terms(d: usize, q: u32) -> Result<Vec<(Vec<usize>, BigRational)>> {
    check(d, q)?;
    compositions(d)
        .into_iter()
        .map(|comp| {
            let (c, xs) = composition_data(&comp, q)?;
            let v = xs.iter().fold(c, |acc, x| acc * geometric(x));
            Ok((comp, v))
        })
        .collect()
}

fn check(d: usize, q: u32) -> Result<()> {
    if d < 2 {
        return invalid("covolume needs d ≥ 2");
    }
    check_prime(q)
}

/// The exact covolume (PGL convention).
pub fn covolume(d: usize, q: u32) -> Result<BigRational> {
    covolume_with(d, q, Normalization::Pgl)
}

pub fn covolume_with(d: usize, q: u32, norm: Normalization) -> Result<BigRational> {
    let sum = covolume_terms(d, q)?.into_iter().fold(BigRational::zero(), |acc, (_, v)| acc + v);
    Ok(normalize(sum, q, norm))
}

/// Cumulative sums Σ_{n1(n̄) ≤ N} 1/|Γ_n̄| for N = 0, …, max_n1.
pub fn covolume_partial_series(d: usize, q: u32, max_n1: i64, norm: Normalization) -> Result<Vec<BigRational>> {
    check(d, q)?;
    if max_n1 < 0 {
        return invalid("max_n1 must be non-negative");
    }
    let mut shells = vec![BigRational::zero(); max_n1 as usize + 1];
    for l in enumerate_t(d, max_n1)? {
        let w = BigRational::new(BigInt::one(), BigInt::from(stabilizer_order(&l, q)?));
        shells[l.n1() as usize] += w;
    }
    let mut acc = BigRational::zero();
    Ok(shells
        .into_iter()
        .map(|s| {
            acc += s;
            normalize(acc.clone(), q, norm)
        })
        .collect())
}

pub fn covolume_partial(d: usize, q: u32, max_n1: i64, norm: Normalization) -> Result<BigRational> {
    Ok(covolume_partial_series(d, q, max_n1, norm)?.pop().expect("non-empty series"))
}

/// An upper bound for covolume − covolume_partial(max_n1) (PGL convention). A label beyond
/// the truncation has gap sum > N over its r − 1 gaps, so some gap is at least
/// M = ⌊N/(r−1)⌋ + 1; the union bound over which gap gives
/// c · Σ_l x_l^M/(1 − x_l) · ∏_{l' ≠ l} x_{l'}/(1 − x_{l'}).
pub fn covolume_tail_bound(d: usize, q: u32, max_n1: i64, norm: Normalization) -> Result<BigRational> {
    check(d, q)?;
    if max_n1 < 0 {
        return invalid("max_n1 must be non-negative");
    }
    let mut total = BigRational::zero();
    for comp in compositions(d) {
        let r = comp.len();
        if r < 2 {
            continue;
        }
        let (c, xs) = composition_data(&comp, q)?;
        let m = (max_n1 as usize) / (r - 1) + 1;
        let mut s = BigRational::zero();
        for l in 0..xs.len() {
            let mut term = num_traits::pow(xs[l].clone(), m) / (BigRational::one() - &xs[l]);
            for (k, x) in xs.iter().enumerate() {
                if k != l {
                    term *= geometric(x);
                }
            }
            s += term;
        }
        total += c * s;
    }
    Ok(normalize(total, q, norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(1), vec![vec![1]]);
        assert_eq!(compositions(3).len(), 4);
        assert_eq!(compositions(5).len(), 16);
    }

    #[test]
    fn d2_values() {
        assert_eq!(covolume(2, 2).unwrap(), rat(2, 3));
        // 1/((q−1)q(q+1)) + 1/(q(q−1)²) at q = 3.
        assert_eq!(covolume(2, 3).unwrap(), rat(1, 24) + rat(1, 12));
        assert_eq!(covolume_with(2, 2, Normalization::Gl).unwrap(), rat(2, 3));
        assert_eq!(covolume_with(2, 3, Normalization::Gl).unwrap(), (rat(1, 24) + rat(1, 12)) / rat(2, 1));
    }

    #[test]
    fn partial_sums_below_closed_form() {
        let c = covolume(3, 2).unwrap();
        let s = covolume_partial_series(3, 2, 10, Normalization::Pgl).unwrap();
        for (n, p) in s.iter().enumerate() {
            assert!(*p < c);
            assert!(&c - p <= covolume_tail_bound(3, 2, n as i64, Normalization::Pgl).unwrap());
        }
        assert_eq!(s[0], rat(1, 168));
    }
}
