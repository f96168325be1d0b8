//! The truncated quotient graph: the three edge-stabilizer methods against each other and
//! against orbit sizes in the building, plus serialization.

use std::collections::BTreeSet;

use btq_core::building::expected_neighbor_count;
use btq_core::domain::{label, orbit_decomposition};
use btq_core::quotient::{
    build_graph, build_graph_with, classify_edge_d3, edge_stabilizer_order, make_edge, EdgeStabMethod, EdgeType,
    QuotientGraph,
};
use btq_core::BtqError;
use num_bigint::BigInt;
use num_rational::BigRational;

const BRUTE: EdgeStabMethod = EdgeStabMethod::BruteForce { bound: 1_000_000 };

fn same_edges(a: &QuotientGraph, b: &QuotientGraph) {
    assert_eq!(a.vertices, b.vertices);
    assert_eq!(a.edges, b.edges);
}

#[test]
fn table_matches_block_formula_in_dimension_three() {
    for q in [2u32, 3, 5, 7] {
        same_edges(&build_graph(3, q, 6).unwrap(), &build_graph_with(3, q, 6, EdgeStabMethod::Table).unwrap());
    }
}

#[test]
fn brute_force_matches_block_formula() {
    for (d, q, n) in [(2usize, 2u32, 4i64), (2, 3, 3), (2, 5, 2), (3, 2, 2), (3, 3, 1), (4, 2, 1)] {
        same_edges(&build_graph(d, q, n).unwrap(), &build_graph_with(d, q, n, BRUTE).unwrap());
    }
}

/// |Γ_u| / |Γ_u ∩ Γ_v| is the size of the Γ_u-orbit of the neighbor L_v of L_u.
#[test]
fn ratios_are_orbit_sizes() {
    for (d, q, n) in [(3usize, 2u32, 2i64), (2, 3, 3), (3, 3, 1)] {
        let g = build_graph(d, q, n).unwrap();
        for (u, _) in &g.vertices {
            let orbits = orbit_decomposition(u, q, d - 1).unwrap();
            for e in g.out_edges(u) {
                let hits: Vec<_> = orbits.iter().filter(|o| o.label == e.to).collect();
                assert_eq!(hits.len(), 1, "{u} -> {}", e.to);
                assert_eq!(e.ratio_from, BigRational::from_integer(BigInt::from(hits[0].size())), "{u} -> {}", e.to);
            }
        }
    }
}

#[test]
fn out_ratios_sum_to_the_neighbor_count() {
    for (d, q) in [(2usize, 3u32), (3, 2), (3, 5), (4, 2)] {
        let g = build_graph(d, q, 4).unwrap();
        let count = BigRational::from_integer(BigInt::from(expected_neighbor_count(d, d - 1, q).unwrap()));
        for (u, _) in &g.vertices {
            let out: BigRational = g.out_edges(u).iter().map(|e| e.ratio_from.clone()).sum();
            let inn: BigRational = g.in_edges(u).iter().map(|e| e.ratio_to.clone()).sum();
            if g.out_complete(u) {
                assert_eq!(out, count, "d={d} q={q} {u} out");
            } else {
                assert!(out < count);
            }
            if g.in_complete(u) {
                assert_eq!(inn, count, "d={d} q={q} {u} in");
            }
        }
    }
}

#[test]
fn all_twelve_edge_types_occur() {
    let g = build_graph(3, 2, 4).unwrap();
    let types: BTreeSet<u8> = g
        .edges
        .iter()
        .map(|e| match e.edge_type {
            EdgeType::D3(t) => t,
            EdgeType::Generic => panic!("untyped edge in d = 3"),
        })
        .collect();
    assert_eq!(types, (1..=12).collect());
    assert!(build_graph(4, 2, 1).unwrap().edges.iter().all(|e| e.edge_type == EdgeType::Generic));
}

#[test]
fn non_edges_are_rejected() {
    let (u, v) = (label(&[0, 0, 0]), label(&[2, 0, 0]));
    assert!(matches!(classify_edge_d3(&u, &v), Err(BtqError::InvalidInput(_))));
    assert!(edge_stabilizer_order(&u, &v, 2, EdgeStabMethod::BlockFormula).is_err());
    assert!(classify_edge_d3(&label(&[0, 0]), &label(&[1, 0])).is_err());
    assert!(make_edge(&label(&[0, 0, 0]), &label(&[1, 0, 0]), 4, EdgeStabMethod::BlockFormula).is_err());
    assert!(matches!(
        edge_stabilizer_order(&label(&[0, 0, 0]), &label(&[1, 0, 0]), 2, EdgeStabMethod::BruteForce { bound: 10 }),
        Err(BtqError::ResourceBound(_))
    ));
}

#[test]
fn json_round_trip_preserves_everything() {
    let g = build_graph(3, 3, 3).unwrap();
    let back = QuotientGraph::from_json(&g.to_json()).unwrap();
    assert_eq!((back.d, back.q, back.max_n1), (g.d, g.q, g.max_n1));
    same_edges(&g, &back);
    for (u, _) in &g.vertices {
        assert_eq!(g.out_complete(u), back.out_complete(u));
        assert_eq!(g.in_complete(u), back.in_complete(u));
    }
    assert_eq!(back.to_json(), g.to_json());
    assert!(matches!(QuotientGraph::from_json("{\"d\": 3}"), Err(BtqError::Parse(_))));
}

#[test]
fn dot_lists_every_vertex_and_edge() {
    let g = build_graph(3, 2, 2).unwrap();
    let dot = g.to_dot();
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches(" -> ").count(), g.edges.len());
    assert_eq!(dot.matches("stab_order=").count(), g.vertices.len());
    assert!(dot.contains("\"0,0,0\" [stab_order=\"168\"]"));
}
