//! Weighted Hecke operators on the quotient, their commutation and adjointness, the
//! simultaneous-eigenvector recursions (d = 2, 3) and the covolume of Γ.
//!
//! A [`DomainFunction`] stores `Option<S>` per vertex of a truncation of T; `None` is the
//! explicit "undefined" marker produced where an operator would need values outside the
//! truncation. Nothing is ever zero-padded.

pub mod covolume;
pub mod eigen;
pub mod expr;
pub mod scalar;

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::VertexLabel;
use crate::error::{invalid, BtqError, Result};
use crate::gf::gaussian_binomial;
use crate::quotient::QuotientGraph;

pub use covolume::{covolume, covolume_partial, covolume_partial_series, covolume_tail_bound, covolume_with, Normalization};
pub use eigen::{
    closed_form_regression, closed_forms_d3, eigenvector_d2, eigenvector_d3, ClosedForm, EigenvectorD2, EigenvectorD3,
    HeckeParams, RegressionEntry,
};
pub use scalar::{parse_complex, parse_rational, QuadExt, Scalar};

/// A function on a truncation of T, with an explicit undefined marker.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainFunction<S> {
    pub d: usize,
    pub max_n1: i64,
    pub values: BTreeMap<VertexLabel, Option<S>>,
}

impl<S: Scalar> DomainFunction<S> {
    /// Builds a fully defined function from a value map on the graph's vertex set.
    pub fn from_fn(graph: &QuotientGraph, mut f: impl FnMut(&VertexLabel) -> S) -> Self {
        let values = graph.labels().map(|l| (l.clone(), Some(f(l)))).collect();
        DomainFunction { d: graph.d, max_n1: graph.max_n1, values }
    }

    pub fn constant(graph: &QuotientGraph, c: S) -> Self {
        Self::from_fn(graph, |_| c.clone())
    }

    /// The value at l: `None` if l is outside the truncation or marked undefined.
    pub fn get(&self, l: &VertexLabel) -> Option<&S> {
        self.values.get(l).and_then(|v| v.as_ref())
    }

    pub fn is_defined(&self, l: &VertexLabel) -> bool {
        self.get(l).is_some()
    }

    pub fn defined_count(&self) -> usize {
        self.values.values().filter(|v| v.is_some()).count()
    }

    /// Pointwise scalar multiple (undefined stays undefined).
    pub fn scale(&self, c: &S) -> Self {
        let values = self.values.iter().map(|(l, v)| (l.clone(), v.clone().map(|x| c.clone() * x))).collect();
        DomainFunction { d: self.d, max_n1: self.max_n1, values }
    }

    /// Pointwise difference, defined where both sides are.
    pub fn sub(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .map(|(l, v)| {
                let w = match (v, other.get(l)) {
                    (Some(a), Some(b)) => Some(a.clone() - b.clone()),
                    _ => None,
                };
                (l.clone(), w)
            })
            .collect();
        DomainFunction { d: self.d, max_n1: self.max_n1, values }
    }
}

impl DomainFunction<BigRational> {
    /// Random small rationals (numerators in [−9, 9], denominators in [1, 9]) on labels with
    /// n1 ≤ support_n1, zero elsewhere. Seeded and deterministic.
    pub fn random_rational(graph: &QuotientGraph, support_n1: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(graph, |l| {
            let num: i64 = rng.gen_range(-9..=9);
            let den: i64 = rng.gen_range(1..=9);
            if l.n1() <= support_n1 {
                BigRational::new(BigInt::from(num), BigInt::from(den))
            } else {
                BigRational::from_integer(BigInt::from(0))
            }
        })
    }
}

fn check_operator(graph: &QuotientGraph, i: usize) -> Result<()> {
    if graph.d < 2 {
        return invalid("Hecke operators need d ≥ 2");
    }
    if i != 1 && i != graph.d - 1 {
        return invalid(format!(
            "only A_1 and A_{} are realized on the color-1 quotient (asked for A_{i})",
            graph.d - 1
        ));
    }
    Ok(())
}

/// (A_i f)(u) = Σ (w(u,v)/w(u))·f(v) over the color-i edges at u. A_1 uses the color-1
/// out-edges with their `ratio_from`; A_{d−1} uses the reversed color-1 in-edges with their
/// `ratio_to`. The result is undefined at u unless every neighbor of u lies in the
/// truncation and f is defined there.
pub fn apply_hecke<S: Scalar>(graph: &QuotientGraph, i: usize, f: &DomainFunction<S>) -> Result<DomainFunction<S>> {
    check_operator(graph, i)?;
    if f.d != graph.d {
        return invalid("function and graph have different dimensions");
    }
    let use_out = i == 1;
    let mut values = BTreeMap::new();
    for u in graph.labels() {
        let complete = if use_out { graph.out_complete(u) } else { graph.in_complete(u) };
        let value = if !complete {
            None
        } else {
            let edges = if use_out { graph.out_edges(u) } else { graph.in_edges(u) };
            let mut acc = Some(S::zero());
            for e in edges {
                let (v, w) = if use_out { (&e.to, &e.ratio_from) } else { (&e.from, &e.ratio_to) };
                acc = match (acc, f.get(v)) {
                    (Some(a), Some(x)) => Some(a + S::from_rational(w) * x.clone()),
                    _ => None,
                };
            }
            acc
        };
        values.insert(u.clone(), value);
    }
    Ok(DomainFunction { d: graph.d, max_n1: graph.max_n1, values })
}

/// Residuals of (A_1 A_{d−1} − A_{d−1} A_1) f at every vertex where both compositions are
/// defined.
#[derive(Clone, Debug)]
pub struct CommutatorReport<S> {
    pub residuals: BTreeMap<VertexLabel, S>,
    pub max_magnitude: f64,
}

impl<S: Scalar> CommutatorReport<S> {
    pub fn checked(&self) -> usize {
        self.residuals.len()
    }

    /// True when every residual is zero (exactly for exact backends, within tol otherwise).
    pub fn vanishes(&self, tol: f64) -> bool {
        self.residuals.values().all(|r| r.agrees(&S::zero(), tol))
    }
}

pub fn commutator_check<S: Scalar>(graph: &QuotientGraph, f: &DomainFunction<S>) -> Result<CommutatorReport<S>> {
    let j = graph.d - 1;
    let a = apply_hecke(graph, 1, &apply_hecke(graph, j, f)?)?;
    let b = apply_hecke(graph, j, &apply_hecke(graph, 1, f)?)?;
    let residuals: BTreeMap<_, _> = a.sub(&b).values.into_iter().filter_map(|(l, v)| v.map(|x| (l, x))).collect();
    if residuals.is_empty() {
        return Err(BtqError::InvalidInput("truncation has no doubly-interior vertex; raise max_n1".into()));
    }
    let max_magnitude = residuals.values().map(|r| r.magnitude()).fold(0.0, f64::max);
    Ok(CommutatorReport { residuals, max_magnitude })
}

/// Checks A_i 1 = [d choose i]_q · 1 at every vertex where A_i 1 is defined. Returns the
/// number of vertices checked and the labels that fail.
pub fn row_sum_check(graph: &QuotientGraph, i: usize) -> Result<(usize, Vec<VertexLabel>)> {
    let expected = BigRational::from_integer(BigInt::from(gaussian_binomial(graph.d, i as i64, graph.q)?));
    let one = DomainFunction::constant(graph, BigRational::from_integer(BigInt::from(1)));
    let a = apply_hecke(graph, i, &one)?;
    let mut checked = 0;
    let mut bad = Vec::new();
    for (l, v) in &a.values {
        if let Some(x) = v {
            checked += 1;
            if *x != expected {
                bad.push(l.clone());
            }
        }
    }
    Ok((checked, bad))
}

/// ⟨f, g⟩ = Σ f(u)·conj(g(u)) / |Γ_u| over the vertices where both are defined.
pub fn inner_product<S: Scalar>(graph: &QuotientGraph, f: &DomainFunction<S>, g: &DomainFunction<S>) -> S {
    let mut acc = S::zero();
    for (l, st) in &graph.vertices {
        if let (Some(a), Some(b)) = (f.get(l), g.get(l)) {
            let w = BigRational::new(BigInt::from(1), BigInt::from(st.clone()));
            acc = acc + S::from_rational(&w) * a.clone() * b.conj();
        }
    }
    acc
}

/// Both sides of ⟨A_1 f, g⟩ = ⟨f, A_{d−1} g⟩ for finitely supported f, g. Fails if some term
/// with g(u) ≠ 0 (resp. f(u) ≠ 0) needs an undefined operator value.
pub fn adjointness_check<S: Scalar>(graph: &QuotientGraph, f: &DomainFunction<S>, g: &DomainFunction<S>) -> Result<(S, S)> {
    let af = apply_hecke(graph, 1, f)?;
    let ag = apply_hecke(graph, graph.d - 1, g)?;
    let zero = S::zero();
    for (l, _) in &graph.vertices {
        let needs = |h: &DomainFunction<S>, a: &DomainFunction<S>| {
            h.get(l).is_some_and(|x| *x != zero) && !a.is_defined(l)
        };
        if needs(g, &af) || needs(f, &ag) {
            return invalid(format!("support reaches the truncation boundary at ({l})"));
        }
    }
    // Zero-extend the operator images where the partner vanishes; those terms contribute 0.
    let fill = |a: &DomainFunction<S>| {
        let values = a.values.iter().map(|(l, v)| (l.clone(), Some(v.clone().unwrap_or_else(S::zero)))).collect();
        DomainFunction { d: a.d, max_n1: a.max_n1, values }
    };
    Ok((inner_product(graph, &fill(&af), g), inner_product(graph, f, &fill(&ag))))
}

/// Eigen-identity residuals (A_i f)(u) − λ·f(u) at the vertices where A_i f is defined.
pub fn eigen_identity_residuals<S: Scalar>(
    graph: &QuotientGraph,
    i: usize,
    f: &DomainFunction<S>,
    lambda: &S,
) -> Result<BTreeMap<VertexLabel, S>> {
    let af = apply_hecke(graph, i, f)?;
    Ok(af
        .sub(&f.scale(lambda))
        .values
        .into_iter()
        .filter_map(|(l, v)| v.map(|x| (l, x)))
        .collect())
}

/// Per-shell weighted L² mass Σ_{n1(u) = s} |f(u)|²/|Γ_u| together with the running totals.
#[derive(Clone, Debug)]
pub struct L2Report<S> {
    pub shells: Vec<S>,
    pub cumulative: Vec<S>,
}

pub fn l2_partial_norm<S: Scalar>(graph: &QuotientGraph, f: &DomainFunction<S>, max_n1: i64) -> Result<L2Report<S>> {
    if max_n1 > graph.max_n1 || max_n1 < 0 {
        return invalid(format!("max_n1 must lie in 0..={}", graph.max_n1));
    }
    let mut shells = vec![S::zero(); max_n1 as usize + 1];
    for (l, st) in &graph.vertices {
        if l.n1() > max_n1 {
            continue;
        }
        let x = f.get(l).ok_or_else(|| BtqError::InvalidInput(format!("f is undefined at ({l})")))?;
        let w = BigRational::new(BigInt::from(1), BigInt::from(st.clone()));
        let s = &mut shells[l.n1() as usize];
        *s = s.clone() + S::from_rational(&w) * x.abs_sq();
    }
    let mut cumulative = Vec::with_capacity(shells.len());
    let mut acc = S::zero();
    for s in &shells {
        acc = acc + s.clone();
        cumulative.push(acc.clone());
    }
    Ok(L2Report { shells, cumulative })
}

/// 1/|Γ_u| as a rational.
pub fn weight(stab_order: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(stab_order.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::label;
    use crate::quotient::build_graph;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn operator_at_origin_and_boundary() {
        let g = build_graph(3, 2, 4).unwrap();
        // f = indicator of 100.
        let f = DomainFunction::from_fn(&g, |l| if *l == label(&[1, 0, 0]) { rat(1) } else { rat(0) });
        let a1 = apply_hecke(&g, 1, &f).unwrap();
        assert_eq!(a1.get(&label(&[0, 0, 0])), Some(&rat(7)));
        assert!(a1.get(&label(&[4, 0, 0])).is_none());
        assert!(apply_hecke(&g, 3, &f).is_err());
    }

    #[test]
    fn small_commutator_and_row_sums() {
        let g = build_graph(3, 3, 6).unwrap();
        let f = DomainFunction::random_rational(&g, 6, 7);
        assert!(commutator_check(&g, &f).unwrap().vanishes(0.0));
        for i in [1, 2] {
            let (n, bad) = row_sum_check(&g, i).unwrap();
            assert!(n > 0 && bad.is_empty());
        }
        let small = build_graph(3, 2, 0).unwrap();
        assert!(commutator_check(&small, &DomainFunction::constant(&small, rat(1))).is_err());
    }

    #[test]
    fn adjoint_pair() {
        let g = build_graph(3, 2, 7).unwrap();
        let f = DomainFunction::random_rational(&g, 5, 1);
        let h = DomainFunction::random_rational(&g, 5, 2);
        let (l, r) = adjointness_check(&g, &f, &h).unwrap();
        assert_eq!(l, r);
        let wide = DomainFunction::random_rational(&g, 7, 3);
        assert!(adjointness_check(&g, &wide, &h).is_err());
    }
}
