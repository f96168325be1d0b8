//! Normal forms, colors and neighbors of the building, checked against an independent
//! lattice-equality oracle and by randomized invariants.

use btq_core::building::{
    edge_color, expected_neighbor_count, neighbors, sublattice_from_subspace, rref_subspaces, vertex_color,
    vertex_normal_form, BuildingVertex,
};
use btq_core::laurent::{random_gamma, random_k, LaurentMatrix, LaurentPoly, OPrecision};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Valuation v = −deg of a nonzero Laurent polynomial.
fn val(p: &LaurentPoly) -> i64 {
    p.valuation().expect("nonzero")
}

/// L(b) ⊆ L(a) iff every entry of adj(a)·b has valuation ≥ v(det a).
fn contained(b: &LaurentMatrix, a: &LaurentMatrix) -> bool {
    let va = val(&a.det());
    let prod = &a.adjugate() * b;
    prod.entries().iter().all(|e| e.is_zero() || val(e) >= va)
}

/// Same homothety class, decided from determinants and containment only.
fn same_class(a: &LaurentMatrix, b: &LaurentMatrix) -> bool {
    let d = a.dim() as i64;
    let diff = val(&b.det()) - val(&a.det());
    if diff % d != 0 {
        return false;
    }
    // t^s scales the valuation of the determinant by −s·d.
    let b2 = b.shift(diff / d);
    contained(&b2, a) && val(&b2.det()) == val(&a.det())
}

/// Some t^s·L(b) lies in L(a) with index q^k.
fn sublattice_of_index(b: &LaurentMatrix, a: &LaurentMatrix, k: i64) -> bool {
    let d = a.dim() as i64;
    let excess = val(&b.det()) - val(&a.det()) - k;
    excess % d == 0 && contained(&b.shift(excess / d), a)
}

fn random_laurent_matrix(d: usize, q: u32, seed: u64) -> LaurentMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = LaurentMatrix::from_fn(q, d, |_, _| {
            let terms: Vec<(i64, i64)> = (-3..=3).map(|e| (e, rng.gen_range(0..q as i64))).collect();
            LaurentPoly::from_terms(q, terms)
        });
        if !m.det().is_zero() {
            return m;
        }
    }
}

fn prime() -> impl Strategy<Value = u32> {
    prop_oneof![Just(2u32), Just(3), Just(5)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_form_spans_the_same_class(d in 2usize..=4, q in prime(), seed in any::<u64>()) {
        let m = random_laurent_matrix(d, q, seed);
        let v = vertex_normal_form(&m).unwrap();
        prop_assert!(same_class(v.basis(), &m));
        prop_assert_eq!(v.profile().iter().copied().min(), Some(0));
    }

    #[test]
    fn normal_form_is_idempotent(d in 2usize..=4, q in prime(), seed in any::<u64>()) {
        let v = vertex_normal_form(&random_laurent_matrix(d, q, seed)).unwrap();
        prop_assert_eq!(vertex_normal_form(v.basis()).unwrap(), v);
    }

    #[test]
    fn normal_form_ignores_k_and_homothety(d in 2usize..=4, q in prime(), seed in any::<u64>(), s in -4i64..=4) {
        let m = random_laurent_matrix(d, q, seed);
        let k = random_k(d, q, OPrecision { depth: 8 }, seed ^ 0x5555).unwrap();
        let v = vertex_normal_form(&m).unwrap();
        prop_assert_eq!(&vertex_normal_form(&(&m * &k)).unwrap(), &v);
        prop_assert_eq!(&vertex_normal_form(&m.shift(s)).unwrap(), &v);
    }

    #[test]
    fn distinct_classes_get_distinct_forms(d in 2usize..=3, q in prime(), seed in any::<u64>(), j in 0usize..3) {
        let m = random_laurent_matrix(d, q, seed);
        let mut e = vec![0i64; d];
        e[j % d] = 1;
        let m2 = &m * &LaurentMatrix::diag_t(&e, q);
        prop_assert!(!same_class(&m, &m2));
        prop_assert_ne!(vertex_normal_form(&m).unwrap(), vertex_normal_form(&m2).unwrap());
    }

    #[test]
    fn determinant_is_multiplicative(d in 2usize..=4, q in prime(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_laurent_matrix(d, q, s1);
        let b = random_laurent_matrix(d, q, s2);
        prop_assert_eq!((&a * &b).det(), &a.det() * &b.det());
        let g = random_gamma(d, q, 2, s1).unwrap();
        prop_assert!(g.is_in_gl_fq_t());
        prop_assert_eq!(g.det().degree(), Some(0));
    }

    #[test]
    fn edge_colors_are_antisymmetric(d in 2usize..=4, q in prime(), seed in any::<u64>(), k in 1usize..4, pick in any::<usize>()) {
        prop_assume!(k < d);
        let v = vertex_normal_form(&random_laurent_matrix(d, q, seed)).unwrap();
        let nb = neighbors(&v, k).unwrap();
        let w = &nb[pick % nb.len()];
        let c = edge_color(w, &v).unwrap();
        let back = edge_color(&v, w).unwrap();
        prop_assert_eq!(c as usize, k);
        prop_assert_eq!((c + back) as usize % d, 0);
        let dd = d as u32;
        prop_assert_eq!((vertex_color(&v) + dd - vertex_color(w)) % dd, c % dd);
    }
}

#[test]
fn worked_example_normal_form() {
    // The reduced basis is upper triangular with monomial pivots t^{a_i}, and every entry
    // above a pivot is a residue modulo t^{a_i}·O, i.e. uses only exponents above a_i.
    let q = 3;
    let p = |s: &str| LaurentPoly::parse(s, q).unwrap();
    let z = LaurentPoly::zero(q);
    let m = LaurentMatrix::new(
        q,
        vec![vec![p("t^2"), z.clone(), p("2*t^3+t")], vec![z.clone(), p("t"), p("t^2+1")], vec![z.clone(), z, p("t")]],
    )
    .unwrap();
    let v = vertex_normal_form(&m).unwrap();
    assert!(same_class(v.basis(), &m));
    for i in 0..3 {
        assert_eq!(v.basis().get(i, i), &LaurentPoly::monomial(1, v.profile()[i], q));
        for j in 0..i {
            assert!(v.basis().get(i, j).is_zero());
        }
        for j in i + 1..3 {
            let a = v.profile()[i];
            assert!(v.basis().get(i, j).terms().all(|(e, _)| e > a), "entry ({i},{j}) is not a residue");
        }
    }
}

#[test]
fn neighbor_counts_are_gaussian_binomials() {
    for (d, q) in [(2usize, 3u32), (3, 2), (3, 3), (4, 2)] {
        let o = BuildingVertex::origin(d, q).unwrap();
        for k in 1..d {
            let nb = neighbors(&o, k).unwrap();
            assert_eq!(nb.len(), expected_neighbor_count(d, k, q).unwrap(), "d={d} q={q} k={k}");
            assert_eq!(rref_subspaces(d, d - k, q).len(), nb.len());
            for w in &nb {
                assert_eq!(edge_color(w, &o), Some(k as u32));
                assert!(sublattice_of_index(w.basis(), o.basis(), k as i64), "d={d} q={q} k={k}");
            }
        }
    }
}

#[test]
fn sublattice_of_the_full_space_is_the_vertex() {
    let o = BuildingVertex::origin(3, 2).unwrap();
    let all = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    assert_eq!(sublattice_from_subspace(&o, &all).unwrap(), o);
}
