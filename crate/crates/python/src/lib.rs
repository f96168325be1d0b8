//! Python bindings: the `btq` module.
//!
//! Exact rationals cross the boundary as `fractions.Fraction`, big integers as `int`, labels as
//! tuples and matrices as row lists of Laurent-polynomial strings such as `"t^2+1"`.
//! Eigenvalues may be `int`, `Fraction` or rational strings (exact arithmetic) or `float` /
//! `complex` (floating point).

use std::collections::BTreeMap;

use btq_core::building::{
    bfs_color1_distance, bfs_distance, label_distance_formulas, vertex_normal_form, BuildingVertex, Reach,
};
use btq_core::domain::{neighbors_in_t, reduce_matrix_to_t, stabilizer_order as stab_order, VertexLabel};
use btq_core::hecke::{
    self, adjointness_check, apply_hecke, closed_form_regression, commutator_check, covolume_partial,
    covolume_tail_bound, covolume_with, eigenvector_d2, eigenvector_d3, parse_rational, row_sum_check,
    DomainFunction, HeckeParams, Normalization, QuadExt, Scalar,
};
use btq_core::laurent::{LaurentMatrix, MatrixLiteral};
use btq_core::quotient::{self, build_graph_with, EdgeStabMethod, EdgeType};
use btq_core::BtqError;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyTuple};

create_exception!(btq, ResourceBoundError, PyException, "An enumeration would exceed its size bound.");

fn to_py_err(e: BtqError) -> PyErr {
    match e {
        BtqError::InvalidInput(_) | BtqError::Parse(_) => PyValueError::new_err(e.to_string()),
        BtqError::ResourceBound(_) => ResourceBoundError::new_err(e.to_string()),
        BtqError::Internal(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for btq_core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn label_of(n: Vec<i64>) -> PyResult<VertexLabel> {
    VertexLabel::new(n).or_raise()
}

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.numer().clone(), r.denom().clone()))
}

/// Reads an exact rational from an `int`, a `Fraction` (anything with integer `numerator` and
/// `denominator`) or a string such as `"3/7"` or `"1.25"`.
fn rational_from(obj: &Bound<'_, PyAny>) -> PyResult<Option<BigRational>> {
    if let Ok(s) = obj.extract::<String>() {
        return parse_rational(&s).map(Some).or_raise();
    }
    if let Ok(n) = obj.extract::<BigInt>() {
        return Ok(Some(BigRational::from_integer(n)));
    }
    if obj.hasattr("numerator")? && obj.hasattr("denominator")? {
        let n: BigInt = obj.getattr("numerator")?.extract()?;
        let d: BigInt = obj.getattr("denominator")?.extract()?;
        if d == BigInt::from(0) {
            return Err(PyValueError::new_err("zero denominator"));
        }
        return Ok(Some(BigRational::new(n, d)));
    }
    Ok(None)
}

fn complex_from(obj: &Bound<'_, PyAny>) -> PyResult<Complex64> {
    obj.extract::<Complex64>()
        .map_err(|_| PyValueError::new_err("expected an int, Fraction, rational string, float or complex"))
}

/// Conversion of backend scalars to Python values.
trait ToPython {
    fn to_python<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>>;
}

impl ToPython for BigRational {
    fn to_python<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self)
    }
}

impl ToPython for Complex64 {
    fn to_python<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(self.into_pyobject(py)?.into_any())
    }
}

/// Rational elements become `Fraction`s; irrational ones their exact text `a+b*sqrt(D)`.
impl ToPython for QuadExt {
    fn to_python<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        if self.b == BigRational::from_integer(BigInt::from(0)) {
            fraction(py, &self.a)
        } else {
            Ok(self.to_text().into_pyobject(py)?.into_any())
        }
    }
}

fn matrix_from(entries: Vec<Vec<String>>, q: u32) -> PyResult<LaurentMatrix> {
    let lit = MatrixLiteral { q, d: entries.len(), entries, profile: None };
    LaurentMatrix::from_literal(&lit).or_raise()
}

fn normalization(s: &str) -> PyResult<Normalization> {
    s.parse().or_raise()
}

fn label_tuple<'py>(py: Python<'py>, l: &VertexLabel) -> PyResult<Bound<'py, PyTuple>> {
    PyTuple::new(py, l.as_slice())
}

/// Order of the stabilizer Γ_n of the vertex with label n (modulo scalars).
#[pyfunction]
fn stabilizer_order(n: Vec<i64>, q: u32) -> PyResult<BigUint> {
    stab_order(&label_of(n)?, q).or_raise()
}

/// In-T neighbors of degree k of the label n.
#[pyfunction]
fn t_neighbors(n: Vec<i64>, k: usize) -> PyResult<Vec<Vec<i64>>> {
    Ok(neighbors_in_t(&label_of(n)?, k).or_raise()?.into_iter().map(Vec::from).collect())
}

/// Canonical basis of the homothety class spanned by the columns: (entries, profile).
#[pyfunction]
fn normal_form(entries: Vec<Vec<String>>, q: u32) -> PyResult<(Vec<Vec<String>>, Vec<i64>)> {
    let v = vertex_normal_form(&matrix_from(entries, q)?).or_raise()?;
    Ok((v.to_literal().entries, v.profile().to_vec()))
}

/// Label in T of the lattice spanned by the columns, with a witness γ ∈ GL_d(F_q[t]).
#[pyfunction]
fn reduce(entries: Vec<Vec<String>>, q: u32) -> PyResult<(Vec<i64>, Vec<Vec<String>>)> {
    let r = reduce_matrix_to_t(&matrix_from(entries, q)?).or_raise()?;
    Ok((r.label.into(), r.witness.to_literal().entries))
}

/// Breadth-first distances between two diagonal lattices (None beyond the radius) and the
/// two label formulas.
#[pyfunction]
#[pyo3(signature = (n, m, q, radius = 6))]
fn distance<'py>(py: Python<'py>, n: Vec<i64>, m: Vec<i64>, q: u32, radius: usize) -> PyResult<Bound<'py, PyDict>> {
    let x = BuildingVertex::diagonal(&n, q).or_raise()?;
    let y = BuildingVertex::diagonal(&m, q).or_raise()?;
    let reach = |r: Reach| match r {
        Reach::Distance(k) => Some(k),
        Reach::BeyondRadius => None,
    };
    let (f_all, f_color1) = label_distance_formulas(&n, &m).or_raise()?;
    let out = PyDict::new(py);
    out.set_item("bfs", reach(bfs_distance(&x, &y, radius).or_raise()?))?;
    out.set_item("bfs_color1", reach(bfs_color1_distance(&x, &y, radius).or_raise()?))?;
    out.set_item("formula", f_all)?;
    out.set_item("formula_color1", f_color1)?;
    Ok(out)
}

/// Exact covolume of Γ; normalization is "pgl" (default) or "gl".
#[pyfunction]
#[pyo3(signature = (d, q, normalization = "pgl"))]
fn covolume<'py>(py: Python<'py>, d: usize, q: u32, normalization: &str) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &covolume_with(d, q, self::normalization(normalization)?).or_raise()?)
}

/// Σ 1/|Γ_n| over the labels with n1 ≤ max_n1.
#[pyfunction]
#[pyo3(signature = (d, q, max_n1, normalization = "pgl"))]
fn covolume_partial_sum<'py>(py: Python<'py>, d: usize, q: u32, max_n1: i64, normalization: &str) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &covolume_partial(d, q, max_n1, self::normalization(normalization)?).or_raise()?)
}

/// Upper bound for covolume − covolume_partial_sum(max_n1).
#[pyfunction]
#[pyo3(signature = (d, q, max_n1, normalization = "pgl"))]
fn covolume_tail<'py>(py: Python<'py>, d: usize, q: u32, max_n1: i64, normalization: &str) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &covolume_tail_bound(d, q, max_n1, self::normalization(normalization)?).or_raise()?)
}

fn d3_result<'py, S: Scalar + ToPython>(
    py: Python<'py>,
    params: HeckeParams<S>,
    max_n1: i64,
) -> PyResult<(Bound<'py, PyDict>, f64)> {
    let eig = eigenvector_d3(&params, max_n1).or_raise()?;
    let out = PyDict::new(py);
    for (&(a, b), v) in &eig.values {
        out.set_item((a, b, 0), v.to_python(py)?)?;
    }
    Ok((out, eig.max_residual()))
}

/// Simultaneous eigenfunction of A_1, A_2 for d = 3 with f(0,0,0) = 1, as a dict keyed by
/// label, together with the largest double-definition residual.
#[pyfunction]
fn eigenvector3<'py>(
    py: Python<'py>,
    lambda1: &Bound<'py, PyAny>,
    lambda2: &Bound<'py, PyAny>,
    q: u32,
    max_n1: i64,
) -> PyResult<(Bound<'py, PyDict>, f64)> {
    btq_core::gf::check_prime(q).or_raise()?;
    match (rational_from(lambda1)?, rational_from(lambda2)?) {
        (Some(a), Some(b)) => d3_result(py, HeckeParams::new(a, b, BigRational::from_integer(q.into())), max_n1),
        _ => {
            let (a, b) = (complex_from(lambda1)?, complex_from(lambda2)?);
            d3_result(py, HeckeParams::new(a, b, Complex64::new(q as f64, 0.0)), max_n1)
        }
    }
}

fn d2_result<'py, S: Scalar + ToPython>(py: Python<'py>, lambda: S, q: S, max_n: usize) -> PyResult<Bound<'py, PyDict>> {
    let e = eigenvector_d2(&lambda, &q, max_n).or_raise()?;
    let list = |xs: &[S]| -> PyResult<Bound<'py, PyList>> {
        PyList::new(py, xs.iter().map(|x| x.to_python(py)).collect::<PyResult<Vec<_>>>()?)
    };
    let out = PyDict::new(py);
    out.set_item("recursion", list(&e.recursion)?)?;
    match &e.closed {
        Some(c) => out.set_item("closed", list(c)?)?,
        None => out.set_item("closed", py.None())?,
    }
    out.set_item("agrees", e.agrees(1e-9))?;
    Ok(out)
}

/// d = 2 eigenfunction f_0, …, f_max_n by recursion and, when λ² ≠ 4q, by the root-sum closed
/// form (exactly in Q(√(λ²−4q)) for rational λ).
#[pyfunction]
fn eigenvector2<'py>(py: Python<'py>, lam: &Bound<'py, PyAny>, q: u32, max_n: usize) -> PyResult<Bound<'py, PyDict>> {
    btq_core::gf::check_prime(q).or_raise()?;
    match rational_from(lam)? {
        Some(a) => d2_result(py, QuadExt::rational(a), QuadExt::rational(BigRational::from_integer(q.into())), max_n),
        None => d2_result(py, complex_from(lam)?, Complex64::new(q as f64, 0.0), max_n),
    }
}

/// Compares the recursion with the bundled d = 3 closed forms at exact rational parameters.
#[pyfunction]
fn closed_form_check<'py>(
    py: Python<'py>,
    lambda1: &Bound<'py, PyAny>,
    lambda2: &Bound<'py, PyAny>,
    q: &Bound<'py, PyAny>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let exact = |o: &Bound<'py, PyAny>| {
        rational_from(o)?.ok_or_else(|| PyValueError::new_err("closed-form checks need exact rational parameters"))
    };
    let params = HeckeParams::new(exact(lambda1)?, exact(lambda2)?, exact(q)?);
    closed_form_regression(&params, 0.0)
        .or_raise()?
        .into_iter()
        .map(|e| {
            let row = PyDict::new(py);
            row.set_item("label", (e.n1, e.n2, 0))?;
            row.set_item("agrees", e.agrees)?;
            row.set_item("suspect", e.suspect)?;
            row.set_item("expected", fraction(py, &e.expected)?)?;
            row.set_item("computed", fraction(py, &e.computed)?)?;
            Ok(row)
        })
        .collect()
}

/// The truncated quotient graph on the labels with n1 ≤ max_n1, with color-1 edges and
/// their stabilizer data.
#[pyclass(name = "QuotientGraph", module = "btq", frozen)]
struct PyQuotientGraph {
    inner: quotient::QuotientGraph,
}

impl PyQuotientGraph {
    fn function_from(&self, values: &Bound<'_, PyDict>) -> PyResult<DomainFunction<BigRational>> {
        let mut map: BTreeMap<VertexLabel, Option<BigRational>> =
            self.inner.labels().map(|l| (l.clone(), None)).collect();
        for (k, v) in values.iter() {
            let l = label_of(k.extract()?)?;
            let slot = map
                .get_mut(&l)
                .ok_or_else(|| PyValueError::new_err(format!("label {l} is outside the truncation")))?;
            *slot = if v.is_none() {
                None
            } else {
                Some(rational_from(&v)?.ok_or_else(|| PyValueError::new_err("function values must be exact rationals"))?)
            };
        }
        Ok(DomainFunction { d: self.inner.d, max_n1: self.inner.max_n1, values: map })
    }

    fn function_to<'py>(&self, py: Python<'py>, f: &DomainFunction<BigRational>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for (l, v) in &f.values {
            match v {
                Some(x) => out.set_item(label_tuple(py, l)?, fraction(py, x)?)?,
                None => out.set_item(label_tuple(py, l)?, py.None())?,
            }
        }
        Ok(out)
    }
}

#[pymethods]
impl PyQuotientGraph {
    /// method: "block" (default), "table" (d = 3 only) or "brute" (enumerates stabilizers).
    #[new]
    #[pyo3(signature = (d, q, max_n1, method = "block", bound = 1_000_000))]
    fn new(d: usize, q: u32, max_n1: i64, method: &str, bound: u64) -> PyResult<Self> {
        let method = match method {
            "block" => EdgeStabMethod::BlockFormula,
            "table" => EdgeStabMethod::Table,
            "brute" => EdgeStabMethod::BruteForce { bound },
            other => return Err(PyValueError::new_err(format!("unknown method \"{other}\""))),
        };
        Ok(PyQuotientGraph { inner: build_graph_with(d, q, max_n1, method).or_raise()? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyQuotientGraph { inner: quotient::QuotientGraph::from_json(text).or_raise()? })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q
    }

    #[getter]
    fn max_n1(&self) -> i64 {
        self.inner.max_n1
    }

    /// (label, stabilizer order) pairs in lexicographic order.
    fn vertices(&self) -> Vec<(Vec<i64>, BigUint)> {
        self.inner.vertices.iter().map(|(l, s)| (l.as_slice().to_vec(), s.clone())).collect()
    }

    fn edges<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .edges
            .iter()
            .map(|e| {
                let row = PyDict::new(py);
                row.set_item("from", label_tuple(py, &e.from)?)?;
                row.set_item("to", label_tuple(py, &e.to)?)?;
                row.set_item("color", e.color)?;
                match e.edge_type {
                    EdgeType::D3(t) => row.set_item("type", t)?,
                    EdgeType::Generic => row.set_item("type", py.None())?,
                }
                row.set_item("edge_stab_order", e.edge_stab_order.clone())?;
                row.set_item("ratio_from", fraction(py, &e.ratio_from)?)?;
                row.set_item("ratio_to", fraction(py, &e.ratio_to)?)?;
                Ok(row)
            })
            .collect()
    }

    /// Whether every color-1 out-neighbor (resp. in-neighbor) of n lies in the truncation.
    fn is_complete(&self, n: Vec<i64>, outgoing: bool) -> PyResult<bool> {
        let l = label_of(n)?;
        Ok(if outgoing { self.inner.out_complete(&l) } else { self.inner.in_complete(&l) })
    }

    /// A_i applied to a function given as {label: value}; absent labels and None values are
    /// undefined, and the result is None wherever it cannot be computed.
    fn hecke<'py>(&self, py: Python<'py>, i: usize, values: &Bound<'py, PyDict>) -> PyResult<Bound<'py, PyDict>> {
        let f = self.function_from(values)?;
        let g = apply_hecke(&self.inner, i, &f).or_raise()?;
        self.function_to(py, &g)
    }

    /// Exact commutator, row-sum and adjointness checks on seeded random rational functions.
    #[pyo3(signature = (trials = 5, seed = 0))]
    fn hecke_check<'py>(&self, py: Python<'py>, trials: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let g = &self.inner;
        let zero = BigRational::from_integer(BigInt::from(0));
        let mut nonzero = 0usize;
        let mut checked = 0usize;
        for k in 0..trials {
            let rep = commutator_check(g, &DomainFunction::random_rational(g, g.max_n1, seed.wrapping_add(k))).or_raise()?;
            checked = rep.checked();
            nonzero += rep.residuals.values().filter(|r| **r != zero).count();
        }
        let mut row_sum_failures = 0;
        for i in [1, g.d - 1] {
            row_sum_failures += row_sum_check(g, i).or_raise()?.1.len();
        }
        let mut adjoint_failures = 0;
        let support = g.max_n1 - 2;
        if support >= 0 {
            for k in 0..trials {
                let f = DomainFunction::random_rational(g, support, seed.wrapping_add(1000 + 2 * k));
                let h = DomainFunction::random_rational(g, support, seed.wrapping_add(1001 + 2 * k));
                let (lhs, rhs) = adjointness_check(g, &f, &h).or_raise()?;
                adjoint_failures += usize::from(lhs != rhs);
            }
        }
        let out = PyDict::new(py);
        out.set_item("commutator_vertices", checked)?;
        out.set_item("commutator_nonzero", nonzero)?;
        out.set_item("row_sum_failures", row_sum_failures)?;
        out.set_item("adjoint_failures", adjoint_failures)?;
        Ok(out)
    }

    /// Weighted L² mass Σ |f(u)|²/|Γ_u| per shell n1 = 0, …, max_n1.
    fn l2_shells<'py>(&self, py: Python<'py>, values: &Bound<'py, PyDict>, max_n1: i64) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let f = self.function_from(values)?;
        let rep = hecke::l2_partial_norm(&self.inner, &f, max_n1).or_raise()?;
        rep.shells.iter().map(|s| fraction(py, s)).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }

    fn __len__(&self) -> usize {
        self.inner.vertices.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "QuotientGraph(d={}, q={}, max_n1={}, vertices={}, edges={})",
            self.inner.d,
            self.inner.q,
            self.inner.max_n1,
            self.inner.vertices.len(),
            self.inner.edges.len()
        )
    }
}

#[pymodule]
fn btq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ResourceBoundError", m.py().get_type::<ResourceBoundError>())?;
    m.add_class::<PyQuotientGraph>()?;
    m.add_function(wrap_pyfunction!(stabilizer_order, m)?)?;
    m.add_function(wrap_pyfunction!(t_neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(covolume, m)?)?;
    m.add_function(wrap_pyfunction!(covolume_partial_sum, m)?)?;
    m.add_function(wrap_pyfunction!(covolume_tail, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvector2, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvector3, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_check, m)?)?;
    Ok(())
}
