//! The fundamental domain T: labels, reduction, stabilizers and in-T neighbors, each compared
//! with a brute-force computation in the building.

use std::collections::BTreeSet;

use btq_core::building::{neighbors, vertex_normal_form};
use btq_core::domain::{
    enumerate_t, friends, label, neighbors_in_t, neighbors_in_t_by_chains, neighbors_in_t_by_shifts,
    orbit_decomposition, reduce_matrix_to_t, reduce_to_t, stabilizer_contains, stabilizer_enumerate,
    stabilizer_order, stabilizes, VertexLabel, DEFAULT_STABILIZER_BOUND,
};
use btq_core::laurent::{random_gamma, random_k, LaurentMatrix, OPrecision};
use btq_core::BtqError;
use num_bigint::BigUint;
use proptest::prelude::*;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn label_strategy(d: usize, max: i64) -> impl Strategy<Value = VertexLabel> {
    proptest::collection::vec(0..=max, d - 1).prop_map(move |mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.push(0);
        VertexLabel::new(v).unwrap()
    })
}

fn small_prime() -> impl Strategy<Value = u32> {
    prop_oneof![Just(2u32), Just(3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduction_recovers_the_label(n in label_strategy(3, 4), q in small_prime(), seed in any::<u64>()) {
        let g = random_gamma(3, q, 3, seed).unwrap();
        let k = random_k(3, q, OPrecision { depth: 6 }, seed.rotate_left(17)).unwrap();
        let m = &(&g * &n.lattice_basis(q)) * &k;
        let r = reduce_matrix_to_t(&m).unwrap();
        prop_assert_eq!(&r.label, &n);
        prop_assert!(r.witness.is_in_gl_fq_t());
        prop_assert_eq!(vertex_normal_form(&(&r.witness * &m)).unwrap(), n.vertex(q).unwrap());
    }

    #[test]
    fn reduction_in_dimension_four(n in label_strategy(4, 3), seed in any::<u64>()) {
        let g = random_gamma(4, 2, 2, seed).unwrap();
        let m = &g * &n.lattice_basis(2);
        prop_assert_eq!(reduce_matrix_to_t(&m).unwrap().label, n);
    }

    #[test]
    fn shift_and_chain_neighbors_agree(n in label_strategy(4, 4), k in 1usize..4) {
        let a: BTreeSet<_> = neighbors_in_t_by_shifts(&n, k).unwrap().into_iter().collect();
        let b: BTreeSet<_> = neighbors_in_t_by_chains(&n, k).unwrap().into_iter().collect();
        prop_assert_eq!(&a, &b);
        let c: BTreeSet<_> = neighbors_in_t(&n, k).unwrap().into_iter().collect();
        prop_assert_eq!(&a, &c);
    }

    #[test]
    fn label_text_round_trip(n in label_strategy(5, 9)) {
        prop_assert_eq!(n.to_string().parse::<VertexLabel>().unwrap(), n.clone());
        let json = serde_json::to_string(&n).unwrap();
        prop_assert_eq!(serde_json::from_str::<VertexLabel>(&json).unwrap(), n);
    }
}

#[test]
fn enumeration_counts_are_binomial() {
    for d in 2..=4usize {
        for n in 0..=5i64 {
            let t = enumerate_t(d, n).unwrap();
            assert_eq!(t.len() as u64, binomial(n as u64 + d as u64 - 1, d as u64 - 1), "d={d} n={n}");
            assert!(t.windows(2).all(|w| w[0] < w[1]));
        }
    }
    assert!(enumerate_t(1, 3).is_err());
    assert!(enumerate_t(3, -1).is_err());
}

#[test]
fn malformed_labels_are_rejected() {
    for bad in ["1,2,0", "2,1,1", "0", "a,b,0", ""] {
        assert!(bad.parse::<VertexLabel>().is_err(), "{bad}");
    }
    assert!(matches!("x,0".parse::<VertexLabel>(), Err(BtqError::Parse(_))));
    assert!(serde_json::from_str::<VertexLabel>("[0,1]").is_err());
    assert_eq!(VertexLabel::normalized(vec![5, 3, 3]).unwrap(), label(&[2, 0, 0]));
}

/// Each enumerated stabilizer element satisfies the degree test, fixes the vertex in the
/// building, and no two elements differ by a scalar.
#[test]
fn stabilizer_enumeration_is_exact() {
    for (n, q) in [(label(&[0, 0]), 3u32), (label(&[2, 0]), 2), (label(&[1, 0, 0]), 2), (label(&[1, 1, 0]), 2), (label(&[2, 1, 0]), 2)] {
        let v = n.vertex(q).unwrap();
        let stab = stabilizer_enumerate(&n, q, DEFAULT_STABILIZER_BOUND).unwrap();
        assert_eq!(BigUint::from(stab.len()), stabilizer_order(&n, q).unwrap(), "{n}");
        let keys: BTreeSet<String> = stab.iter().map(|g| g.to_string()).collect();
        assert_eq!(keys.len(), stab.len());
        for g in &stab {
            assert!(stabilizes(&n, g));
            assert_eq!(vertex_normal_form(&(g * v.basis())).unwrap(), v);
        }
    }
}

#[test]
fn stabilizer_orders_in_small_cases() {
    // |PGL_d(F_q)| at the origin; (q−1)^{r−1}-type torus factors times powers of q for the
    // unipotent polynomial entries elsewhere, e.g. q^{n+1} entries above the diagonal when d = 2.
    assert_eq!(stabilizer_order(&label(&[0, 0]), 3).unwrap(), BigUint::from(24u32));
    assert_eq!(stabilizer_order(&label(&[1, 0]), 3).unwrap(), BigUint::from(2u32 * 9));
    assert_eq!(stabilizer_order(&label(&[0, 0, 0]), 2).unwrap(), BigUint::from(168u32));
    assert_eq!(stabilizer_order(&label(&[1, 0, 0]), 2).unwrap(), BigUint::from(6u32 * 16));
    assert!(stabilizer_order(&label(&[0, 0]), 4).is_err());
}

/// Containment of stabilizers agrees with enumerating the smaller group and testing
/// membership in the larger one.
#[test]
fn stabilizer_containment_by_enumeration() {
    let labels = enumerate_t(3, 2).unwrap();
    for a in &labels {
        let stab = stabilizer_enumerate(a, 2, DEFAULT_STABILIZER_BOUND).unwrap();
        for b in &labels {
            let brute = stab.iter().all(|g| stabilizes(b, g));
            assert_eq!(stabilizer_contains(a, b).unwrap(), brute, "{a} vs {b}");
        }
    }
}

/// Orbits of the stabilizer on building neighbors cover the neighbors exactly once, each
/// reduces to an in-T neighbor, and friends are fixed points.
#[test]
fn orbits_cover_neighbors_and_fix_friends() {
    let q = 2;
    for n in enumerate_t(3, 2).unwrap() {
        for k in 1..3 {
            let orbits = orbit_decomposition(&n, q, k).unwrap();
            let total: usize = orbits.iter().map(|o| o.size()).sum();
            assert_eq!(total, neighbors(&n.vertex(q).unwrap(), k).unwrap().len());
            let in_t: BTreeSet<_> = neighbors_in_t(&n, k).unwrap().into_iter().collect();
            let seen: BTreeSet<_> = orbits.iter().map(|o| o.label.clone()).collect();
            assert_eq!(seen, in_t, "{n} degree {k}");
            for o in &orbits {
                for m in &o.members {
                    assert_eq!(reduce_to_t(m).unwrap().label, o.label);
                }
            }
            if let Some(f) = friends(&n).get(&k) {
                assert!(orbits.iter().any(|o| &o.label == f && o.is_fixed_point()), "{n} friend {f}");
            }
        }
    }
}

#[test]
fn non_integral_matrix_reduces_like_its_scaled_copy() {
    let q = 3;
    let g = random_gamma(3, q, 2, 7).unwrap();
    let m = &g * &LaurentMatrix::diag_t(&[1, -2, -3], q);
    assert_eq!(reduce_matrix_to_t(&m).unwrap().label, label(&[4, 1, 0]));
    assert_eq!(reduce_matrix_to_t(&m.shift(5)).unwrap().label, label(&[4, 1, 0]));
}
