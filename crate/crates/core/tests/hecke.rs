//! Hecke operators on the quotient: the eigenvector recursions are checked against the
//! operators built from the graph, and the covolume against weighted norms and partial sums.

use btq_core::domain::VertexLabel;
use btq_core::hecke::expr::{Bindings, Expr};
use btq_core::hecke::scalar::format_complex;
use btq_core::hecke::{
    adjointness_check, apply_hecke, closed_form_regression, commutator_check, covolume, covolume_partial_series,
    covolume_tail_bound, covolume_with, eigen_identity_residuals, eigenvector_d2, eigenvector_d3, l2_partial_norm,
    parse_complex, parse_rational, row_sum_check, DomainFunction, HeckeParams, Normalization, QuadExt, Scalar,
};
use btq_core::quotient::build_graph;
use btq_core::BtqError;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-40i64..=40, 1i64..=9).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The d = 3 recursion produces a function that the graph operators scale by λ1 and λ2
    /// exactly, and whose doubly-determined values agree.
    #[test]
    fn recursion_is_a_graph_eigenfunction(l1 in small_rational(), l2 in small_rational(), q in prop_oneof![Just(2i64), Just(3), Just(5)]) {
        let n = 7;
        let g = build_graph(3, q as u32, n).unwrap();
        let eig = eigenvector_d3(&HeckeParams::new(l1.clone(), l2.clone(), rat(q, 1)), n).unwrap();
        prop_assert!(eig.residuals.iter().all(|(_, r)| *r == rat(0, 1)));
        let f = eig.to_domain_function();
        for (i, lambda) in [(1usize, &l1), (2, &l2)] {
            let res = eigen_identity_residuals(&g, i, &f, lambda).unwrap();
            prop_assert!(res.len() >= 10);
            prop_assert!(res.values().all(|r| *r == rat(0, 1)), "A_{} residual", i);
        }
    }

    #[test]
    fn closed_forms_agree_exactly(l1 in small_rational(), l2 in small_rational(), q in (2i64..=9).prop_map(|x| rat(x, 1))) {
        let rows = closed_form_regression(&HeckeParams::new(l1, l2, q), 0.0).unwrap();
        prop_assert_eq!(rows.len(), 21);
        for r in rows {
            prop_assert!(r.agrees, "({}, {})", r.n1, r.n2);
        }
    }

    #[test]
    fn operators_commute_and_are_adjoint(seed in any::<u64>(), shape in prop_oneof![Just((3usize, 2u32)), Just((3, 3)), Just((4, 2)), Just((2, 5))]) {
        let (d, q) = shape;
        let g = build_graph(d, q, 4).unwrap();
        let f = DomainFunction::random_rational(&g, 4, seed);
        let report = commutator_check(&g, &f).unwrap();
        prop_assert!(report.checked() > 0);
        prop_assert!(report.residuals.values().all(|r| *r == rat(0, 1)));
        let f = DomainFunction::random_rational(&g, 2, seed);
        let h = DomainFunction::random_rational(&g, 2, seed.wrapping_add(1));
        let (lhs, rhs) = adjointness_check(&g, &f, &h).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn d2_recursion_is_a_graph_eigenfunction_and_matches_the_root_sum() {
    for q in [2i64, 3, 5] {
        let g = build_graph(2, q as u32, 12).unwrap();
        // λ = q + 2 + 1/3 keeps λ² − 4q positive and non-square, so the closed form lives in Q(√Δ).
        let lambda = rat(3 * q + 7, 3);
        let e = eigenvector_d2(&lambda, &rat(q, 1), 12).unwrap();
        let f = DomainFunction::from_fn(&g, |l| e.recursion[l.n1() as usize].clone());
        let res = eigen_identity_residuals(&g, 1, &f, &lambda).unwrap();
        assert_eq!(res.len(), 12);
        assert!(res.values().all(|r| *r == rat(0, 1)));
        assert!(e.closed.is_none(), "no rational square root expected");

        let lq = QuadExt::rational(lambda.clone());
        let eq = eigenvector_d2(&lq, &QuadExt::rational(rat(q, 1)), 12).unwrap();
        assert!(eq.agrees(0.0), "q={q}");

        let lc = Complex64::new(lambda.numer().to_string().parse::<f64>().unwrap() / 3.0, 0.0);
        let ec = eigenvector_d2(&lc, &Complex64::new(q as f64, 0.0), 12).unwrap();
        assert!(ec.max_relative_discrepancy().unwrap() < 1e-9);
    }
}

#[test]
fn tempered_eigenvalues_in_the_complex_backend() {
    // Non-real eigenvalues λ2 = conj(λ1): the recursion stays finite and both identities hold
    // to rounding.
    let q = 3.0;
    let l1 = Complex64::from_polar(4.0, 0.7);
    let l2 = l1.conj();
    let g = build_graph(3, 3, 6).unwrap();
    let eig = eigenvector_d3(&HeckeParams::new(l1, l2, Complex64::new(q, 0.0)), 6).unwrap();
    assert!(eig.max_residual() < 1e-9);
    let f = eig.to_domain_function();
    for (i, lambda) in [(1usize, l1), (2, l2)] {
        let res = eigen_identity_residuals(&g, i, &f, &lambda).unwrap();
        assert!(res.values().all(|r| r.norm() < 1e-8), "A_{i}");
    }
}

#[test]
fn row_sums_are_gaussian_binomials() {
    for (d, q) in [(2usize, 2u32), (2, 7), (3, 2), (3, 3), (4, 2), (4, 3), (5, 2)] {
        let g = build_graph(d, q, 3).unwrap();
        for i in [1, d - 1] {
            let (checked, bad) = row_sum_check(&g, i).unwrap();
            assert!(checked > 0, "d={d} q={q}");
            assert!(bad.is_empty(), "d={d} q={q} A_{i}: {bad:?}");
        }
    }
}

#[test]
fn boundary_values_are_undefined_not_zero() {
    let g = build_graph(3, 2, 3).unwrap();
    let one = DomainFunction::constant(&g, rat(1, 1));
    let a1 = apply_hecke(&g, 1, &one).unwrap();
    for (l, _) in &g.vertices {
        assert_eq!(a1.is_defined(l), g.out_complete(l), "{l}");
        if !a1.is_defined(l) {
            assert_eq!(a1.values.get(l), Some(&None));
        }
    }
    assert!(a1.defined_count() < g.vertices.len());
    // A partially defined input propagates: A_1 at the origin needs f at (1,0,0), its only color-1 out-neighbor.
    let mut f = one.clone();
    f.values.insert(VertexLabel::new(vec![1, 0, 0]).unwrap(), None);
    assert!(!apply_hecke(&g, 1, &f).unwrap().is_defined(&VertexLabel::origin(3)));
}

#[test]
fn only_the_extreme_operators_are_available() {
    let g = build_graph(4, 2, 2).unwrap();
    let one = DomainFunction::constant(&g, rat(1, 1));
    assert!(apply_hecke(&g, 1, &one).is_ok());
    assert!(apply_hecke(&g, 3, &one).is_ok());
    assert!(matches!(apply_hecke(&g, 2, &one), Err(BtqError::InvalidInput(_))));
    assert!(apply_hecke(&g, 0, &one).is_err());
    let tiny = build_graph(3, 2, 0).unwrap();
    assert!(commutator_check(&tiny, &DomainFunction::constant(&tiny, rat(1, 1))).is_err());
}

#[test]
fn weighted_norm_of_one_is_the_partial_covolume() {
    for (d, q) in [(2usize, 3u32), (3, 2), (4, 2)] {
        let g = build_graph(d, q, 5).unwrap();
        let rep = l2_partial_norm(&g, &DomainFunction::constant(&g, rat(1, 1)), 5).unwrap();
        assert_eq!(rep.cumulative, covolume_partial_series(d, q, 5, Normalization::Pgl).unwrap());
    }
}

#[test]
fn covolume_is_squeezed_by_partial_sums_and_tail_bounds() {
    for (d, q, n) in [(2usize, 2u32, 30i64), (3, 2, 24), (3, 3, 16), (4, 2, 10), (5, 2, 6)] {
        let c = covolume(d, q).unwrap();
        let partial = covolume_partial_series(d, q, n, Normalization::Pgl).unwrap();
        for (k, p) in partial.iter().enumerate() {
            assert!(p < &c, "d={d} q={q} N={k}");
            assert!(&c - p <= covolume_tail_bound(d, q, k as i64, Normalization::Pgl).unwrap(), "d={d} q={q} N={k}");
        }
        let gl = covolume_with(d, q, Normalization::Gl).unwrap();
        assert_eq!(gl * rat(q as i64 - 1, 1), c);
    }
}

#[test]
fn covolume_in_dimension_two_matches_the_geometric_series() {
    for q in [2i64, 3, 5, 7, 11] {
        let expected = rat(1, q * (q - 1) * (q + 1)) + rat(1, q * (q - 1) * (q - 1));
        assert_eq!(covolume(2, q as u32).unwrap(), expected);
    }
    assert!(covolume(1, 2).is_err());
    assert!(covolume(3, 6).is_err());
}

#[test]
fn expressions_parse_and_evaluate() {
    let c = |x: i64| rat(x, 1);
    let b = Bindings { l1: c(2), l2: c(3), q: c(5), t: c(31), r: c(6) };
    let cases = [
        ("1 + 2 * 3", c(7)),
        ("(1 + 2) * 3", c(9)),
        ("-q^2", c(-25)),
        ("l1*l2 - q^2*t", c(6 - 775)),
        ("(l1 - r) / (t - q)", rat(-4, 26)),
        ("2^3", c(8)),
    ];
    for (s, want) in cases {
        assert_eq!(Expr::parse(s).unwrap().eval(&b), want, "{s}");
    }
    for bad in ["", "1 +", "q r", "x", "2^-1", "(1", "1)", "2^3^1"] {
        assert!(Expr::parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn scalar_backends_and_literals() {
    let s3 = QuadExt::sqrt_of(rat(-3, 1));
    assert_eq!(s3.clone() * s3.clone(), QuadExt::rational(rat(-3, 1)));
    assert_eq!(s3.conj(), -s3.clone());
    let x = QuadExt::new(rat(1, 2), rat(3, 1), rat(-3, 1));
    assert_eq!(x.checked_div(&x).unwrap(), QuadExt::rational(rat(1, 1)));
    assert_eq!(x.abs_sq(), QuadExt::rational(x.norm()));
    assert_eq!(QuadExt::rational(rat(9, 4)).sqrt(), Some(QuadExt::rational(rat(3, 2))));
    assert!(QuadExt::rational(rat(0, 1)).checked_div(&QuadExt::rational(rat(0, 1))).is_err());

    assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
    assert_eq!(parse_rational("1.25").unwrap(), rat(5, 4));
    assert!(parse_rational("1/0x").is_err());
    assert_eq!(parse_complex("1.5-2i").unwrap(), Complex64::new(1.5, -2.0));
    assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
    assert_eq!(parse_complex("1e-3+1e2i").unwrap(), Complex64::new(1e-3, 100.0));
    assert!(parse_complex("1+").is_err());
    assert_eq!(format_complex(Complex64::new(0.5, -0.25)), "0.500000000000-0.250000000000i");
}
